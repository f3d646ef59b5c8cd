//! The indexing bot: claims unindexed models one at a time and indexes them
//! within a time budget.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{index_model, write_model_index, IndexError};
use crate::repository::{ClaimGuard, IndexStatus, ModelRecord, RepoError, Repository, Store};
use crate::soundness::check_soundness;
use crate::statespace::{AnalysisError, Limits};

#[derive(Debug, Clone)]
pub struct BotOptions {
    pub name: String,
    pub sleep: Duration,
    /// Per-model indexing budget, soundness check included.
    pub max_index: Duration,
    pub thresholds: Vec<f64>,
    pub state_budget: usize,
    /// Budget per model id, replacing `max_index`.
    pub budget_overrides: HashMap<String, Duration>,
    /// Stop after this many consecutive rounds without a job.
    pub max_idle_rounds: Option<usize>,
    pub stop: Option<Arc<AtomicBool>>,
    /// Pause between claiming a job and starting it; used to widen race windows in tests.
    pub claim_delay: Duration,
}

impl BotOptions {
    pub fn new(name: impl Into<String>) -> Self {
        BotOptions {
            name: name.into(),
            sleep: Duration::from_secs(5),
            max_index: Duration::from_secs(60),
            thresholds: vec![0.75, 1.0],
            state_budget: crate::statespace::DEFAULT_STATE_BUDGET,
            budget_overrides: HashMap::new(),
            max_idle_rounds: None,
            stop: None,
            claim_delay: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BotReport {
    pub indexed: Vec<String>,
    pub cannot_index: Vec<(String, String)>,
}

/// Soundness check and indexing of one stored model; writes the index records
/// and returns the status to record. Does not touch the status itself.
pub fn index_stored_model(
    store: &Store,
    repo: &Repository,
    model: &ModelRecord,
    thresholds: &[f64],
    budget: Duration,
    state_budget: usize,
) -> Result<IndexStatus, RepoError> {
    let start = Instant::now();
    let limits = Limits {
        max_states: state_budget,
        deadline: Some(start + budget),
    };
    let timeout = || IndexStatus::CannotIndex {
        reason: format!(
            "indexing could not be completed within {}s",
            budget.as_secs_f64()
        ),
    };
    if let Some(v) = &model.workflow_violation {
        return Ok(IndexStatus::CannotIndex {
            reason: format!("not a workflow system: {v}"),
        });
    }
    if limits.check_deadline().is_err() {
        return Ok(timeout());
    }
    match check_soundness(&model.net, &limits) {
        Ok(r) if r.sound => {}
        Ok(_) => {
            return Ok(IndexStatus::CannotIndex {
                reason: "unsound".into(),
            })
        }
        Err(AnalysisError::DeadlineExceeded) => return Ok(timeout()),
        Err(AnalysisError::Unbounded { .. }) => {
            return Ok(IndexStatus::CannotIndex {
                reason: "unsound".into(),
            })
        }
        Err(e) => {
            return Ok(IndexStatus::CannotIndex {
                reason: e.to_string(),
            })
        }
    }
    match index_model(&model.net, &repo.vocabulary(), thresholds, &limits) {
        Ok(mi) => {
            write_model_index(store, &model.id, &mi)?;
            Ok(IndexStatus::Indexed {
                thresholds: thresholds.to_vec(),
                seconds: start.elapsed().as_secs_f64(),
            })
        }
        Err(IndexError::Analysis(AnalysisError::DeadlineExceeded)) => Ok(timeout()),
        Err(e) => Ok(IndexStatus::CannotIndex {
            reason: e.to_string(),
        }),
    }
}

fn stopped(opts: &BotOptions) -> bool {
    opts.stop
        .as_ref()
        .is_some_and(|s| s.load(Ordering::Relaxed))
}

/// Indexing loop. Returns when `stop` is raised or after `max_idle_rounds`
/// consecutive empty rounds.
pub fn run_bot(store: &Store, opts: &BotOptions) -> Result<BotReport, RepoError> {
    let mut report = BotReport::default();
    let mut idle = 0;
    log::info!("Indexing bot {} started", opts.name);
    while !stopped(opts) {
        let repo = store.load()?;
        let mut job = None;
        for m in repo.models().filter(|m| m.status == IndexStatus::Unindexed) {
            if store.try_claim(&m.id, &opts.name)? == ClaimGuard::Claimed {
                job = Some(m);
                break;
            }
        }
        let Some(model) = job else {
            log::info!("There are no pending jobs");
            idle += 1;
            if opts.max_idle_rounds.is_some_and(|n| idle >= n) {
                break;
            }
            std::thread::sleep(opts.sleep);
            continue;
        };
        idle = 0;
        log::info!("Retrieved indexing job for the model with ID {}", model.id);
        std::thread::sleep(opts.claim_delay);
        match store.set_status(
            &model.id,
            IndexStatus::Indexing {
                by: opts.name.clone(),
            },
        ) {
            Ok(()) => {}
            Err(RepoError::UnknownModel(_)) => continue,
            Err(e) => return Err(e),
        }
        let budget = opts
            .budget_overrides
            .get(&model.id)
            .copied()
            .unwrap_or(opts.max_index);
        let status = index_stored_model(
            store,
            &repo,
            model,
            &opts.thresholds,
            budget,
            opts.state_budget,
        )?;
        match &status {
            IndexStatus::Indexed { seconds, .. } => {
                log::info!("Indexed the model with ID {} in {seconds:.3}s", model.id);
                report.indexed.push(model.id.clone());
            }
            IndexStatus::CannotIndex { reason } => {
                log::warn!("The model with ID {} cannot be indexed: {reason}", model.id);
                report.cannot_index.push((model.id.clone(), reason.clone()));
            }
            _ => {}
        }
        match store.set_status(&model.id, status) {
            Ok(()) | Err(RepoError::UnknownModel(_)) => {}
            Err(e) => return Err(e),
        }
    }
    log::info!("Indexing bot {} stopped", opts.name);
    Ok(report)
}
