//! Benchmark harness: generated collections, in-memory indexing and timed
//! template queries.

use std::fmt::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::generate::{label_pool, random_net, GenConfig};
use crate::index::{index_model, IndexError, RelationIndex};
use crate::query::{evaluate, parse, templates, EvalOptions, Query};
use crate::repository::{IndexStatus, Repository};
use crate::statespace::Limits;

/// `models` sound nets with up to `tasks` observable transitions each, labels
/// drawn from a pool of `pool` shared labels. Models are named `m000`, `m001`, ...
pub fn generate_collection(seed: u64, models: usize, tasks: usize, pool: usize) -> Repository {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GenConfig::sized(tasks, label_pool(pool));
    let mut repo = Repository::new();
    for k in 0..models {
        let net = random_net(&mut rng, &cfg);
        repo.insert(
            &format!("m{k:03}"),
            net,
            "/generated",
            Default::default(),
            IndexStatus::Unindexed,
        )
        .expect("generated ids are unique and valid");
    }
    repo
}

/// The first `n` models of `repo` in id order.
pub fn prefix(repo: &Repository, n: usize) -> Repository {
    let mut out = Repository::new();
    for m in repo.models().take(n) {
        out.insert(
            &m.id,
            m.net.clone(),
            &m.location,
            m.attributes.clone(),
            m.status.clone(),
        )
        .expect("copied from a valid repository");
    }
    out
}

/// Indexes every model in memory. Returns the index and the wall time.
pub fn index_collection(
    repo: &Repository,
    thresholds: &[f64],
    limits: Limits,
    threads: usize,
) -> Result<(RelationIndex, Duration), IndexError> {
    let start = Instant::now();
    let vocab = repo.vocabulary();
    let models: Vec<_> = repo.models().collect();
    let built = crate::parallel::map(&models, threads, |m| {
        index_model(&m.net, &vocab, thresholds, &limits)
    });
    let mut index = RelationIndex::default();
    for (m, mi) in models.iter().zip(built) {
        index.insert(m.id.clone(), mi?);
    }
    Ok((index, start.elapsed()))
}

/// `per_template` instances of each template of `category` (all categories
/// when `None`), labels drawn from the repository vocabulary.
pub fn template_queries(
    repo: &Repository,
    category: Option<u8>,
    per_template: usize,
    seed: u64,
) -> Vec<(String, Query)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = repo.vocabulary().labels().iter().cloned().collect();
    let pool = if labels.is_empty() {
        vec!["a".to_string()]
    } else {
        labels
    };
    let mut out = Vec::new();
    for t in templates::all()
        .into_iter()
        .filter(|t| category.is_none_or(|c| t.category() == c))
    {
        for _ in 0..per_template {
            let text = t.instantiate_random(&mut rng, &pool);
            let q = parse(&text).expect("templates are valid PQL");
            out.push((t.subgroup.to_string(), q));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub queries: usize,
    /// Model-query checks: queries × models evaluated.
    pub checks: usize,
    pub total: Duration,
}

impl Timing {
    pub fn mean_query_ms(&self) -> f64 {
        self.total.as_secs_f64() * 1e3 / self.queries.max(1) as f64
    }

    pub fn mean_check_ms(&self) -> f64 {
        self.total.as_secs_f64() * 1e3 / self.checks.max(1) as f64
    }
}

/// Evaluates each query once and sums the wall time.
pub fn time_queries(
    repo: &Repository,
    index: Option<&RelationIndex>,
    queries: &[Query],
    opts: &EvalOptions,
) -> Timing {
    let start = Instant::now();
    for q in queries {
        let r = evaluate(q, repo, index, opts).expect("template queries declare no variables");
        for (id, e) in &r.errors {
            log::warn!("model {id}: {e}");
        }
    }
    Timing {
        queries: queries.len(),
        checks: queries.len() * repo.len(),
        total: start.elapsed(),
    }
}

/// Least-squares line through `points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Fit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Fit {
        slope,
        intercept,
        r2,
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub category: Option<u8>,
    pub models: usize,
    pub threads: usize,
    pub tasks_per_model: usize,
    pub label_pool: usize,
    pub per_template: usize,
    pub seed: u64,
    pub thresholds: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            category: None,
            models: 16,
            threads: 1,
            tasks_per_model: 10,
            label_pool: 30,
            per_template: 3,
            seed: 1,
            thresholds: vec![0.75, 1.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub models: usize,
    pub threads: usize,
    pub index_time: Duration,
    /// (category, timing) over the full collection.
    pub categories: Vec<(u8, Timing)>,
    /// (fraction, models, timing) over all requested categories.
    pub fractions: Vec<(f64, usize, Timing)>,
    pub fit: Fit,
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "models: {}  threads: {}  parallel build: {}",
            self.models,
            self.threads,
            crate::parallel::is_parallel()
        );
        let _ = writeln!(out, "indexing: {:.3}s", self.index_time.as_secs_f64());
        for (c, t) in &self.categories {
            let _ = writeln!(
                out,
                "category {c}: {} queries, mean {:.3} ms/query, {:.4} ms/model-check",
                t.queries,
                t.mean_query_ms(),
                t.mean_check_ms()
            );
        }
        for (f, n, t) in &self.fractions {
            let _ = writeln!(
                out,
                "fraction {:>3.0}% ({n} models): mean {:.3} ms/query",
                f * 100.0,
                t.mean_query_ms()
            );
        }
        let _ = writeln!(
            out,
            "linear fit: slope {:.4} ms/model, R² {:.3}",
            self.fit.slope, self.fit.r2
        );
        out
    }
}

pub fn run(cfg: &BenchConfig) -> Result<BenchReport, IndexError> {
    let repo = generate_collection(cfg.seed, cfg.models, cfg.tasks_per_model, cfg.label_pool);
    let (index, index_time) =
        index_collection(&repo, &cfg.thresholds, Limits::default(), cfg.threads)?;
    let opts = EvalOptions {
        threads: cfg.threads,
        ..EvalOptions::default()
    };
    let categories: Vec<u8> = match cfg.category {
        Some(c) => vec![c],
        None => vec![1, 2, 3],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut per_category = Vec::new();
    let mut all_queries = Vec::new();
    for &c in &categories {
        let qs: Vec<Query> = template_queries(&repo, Some(c), cfg.per_template, rng.gen())
            .into_iter()
            .map(|(_, q)| q)
            .collect();
        per_category.push((c, time_queries(&repo, Some(&index), &qs, &opts)));
        all_queries.extend(qs);
    }
    let mut fractions = Vec::new();
    for f in [0.25, 0.5, 0.75, 1.0] {
        let n = ((cfg.models as f64 * f).round() as usize).max(1);
        let sub = prefix(&repo, n);
        fractions.push((f, n, time_queries(&sub, Some(&index), &all_queries, &opts)));
    }
    let points: Vec<(f64, f64)> = fractions
        .iter()
        .map(|(_, n, t)| (*n as f64, t.mean_query_ms()))
        .collect();
    Ok(BenchReport {
        models: cfg.models,
        threads: cfg.threads,
        index_time,
        categories: per_category,
        fractions,
        fit: linear_fit(&points),
    })
}
