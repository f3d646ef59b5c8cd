//! Query evaluation over a repository.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::ast::*;
use crate::index::{LookupStats, ModelEvaluator, RelationIndex};
use crate::labels::{similar, LabelError, Vocabulary};
use crate::relations::Task;
use crate::repository::{ModelRecord, Repository};
use crate::statespace::{AnalysisError, Limits};

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Threshold for `~"label"` tasks.
    pub default_threshold: f64,
    pub threads: usize,
    /// Read predicate values from the index where available.
    pub use_index: bool,
    pub limits: Limits,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            default_threshold: 0.75,
            threads: 1,
            use_index: true,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub model: String,
    pub attributes: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryResult {
    /// Sorted by model id.
    pub rows: Vec<Row>,
    /// Printed task expression → resolved task.
    pub task_resolutions: BTreeMap<String, Task>,
    /// Models whose evaluation failed, with the reason; they are not in `rows`.
    pub errors: Vec<(String, String)>,
    pub stats: LookupStats,
}

impl QueryResult {
    pub fn model_ids(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.model.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("variable {0} is used before it is declared")]
    UndeclaredVariable(String),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// Label set of a task expression against `vocab`.
pub fn resolve_task(
    t: &TaskExpr,
    default_threshold: f64,
    vocab: &Vocabulary,
) -> Result<Task, LabelError> {
    let labels = match t {
        TaskExpr::Exact(l) => BTreeSet::from([l.clone()]),
        TaskExpr::DefSim(l) => similar(l, default_threshold, vocab)?,
        TaskExpr::Sim(l, theta) => similar(l, *theta, vocab)?,
    };
    Task::new(labels).map_err(|_| LabelError::EmptyLabel)
}

// Static checks and task collection.

fn walk_set<'q>(
    s: &'q SetExpr,
    scope: &HashSet<&str>,
    tasks: &mut Vec<&'q TaskExpr>,
) -> Result<(), EvalError> {
    match s {
        SetExpr::Var(v) if !scope.contains(v.as_str()) => {
            Err(EvalError::UndeclaredVariable(v.clone()))
        }
        SetExpr::Var(_) | SetExpr::AllTasks => Ok(()),
        SetExpr::Literal(ts) => {
            tasks.extend(ts);
            Ok(())
        }
        SetExpr::UnaryConstruction(_, a) => walk_set(a, scope, tasks),
        SetExpr::BinaryConstruction(_, a, b, _) | SetExpr::Difference(a, b) => {
            walk_set(a, scope, tasks)?;
            walk_set(b, scope, tasks)
        }
        SetExpr::Union(parts) | SetExpr::Intersection(parts) => {
            parts.iter().try_for_each(|p| walk_set(p, scope, tasks))
        }
    }
}

fn walk_pred<'q>(
    p: &'q Predicate,
    scope: &HashSet<&str>,
    tasks: &mut Vec<&'q TaskExpr>,
) -> Result<(), EvalError> {
    use Predicate as P;
    match p {
        P::Unary(_, t) => tasks.push(t),
        P::Binary(_, a, b) => tasks.extend([a, b]),
        P::UnaryMacro(_, s, _) => walk_set(s, scope, tasks)?,
        P::BinaryMacroTaskSet(_, t, s, _) | P::In(t, s) => {
            tasks.push(t);
            walk_set(s, scope, tasks)?;
        }
        P::BinaryMacroSetSet(_, a, b, _) | P::Compare(a, _, b) => {
            walk_set(a, scope, tasks)?;
            walk_set(b, scope, tasks)?;
        }
        P::Truth(_) => {}
        P::Not(q) | P::Test(q, _) => walk_pred(q, scope, tasks)?,
        P::And(parts) | P::Or(parts) => {
            parts.iter().try_for_each(|q| walk_pred(q, scope, tasks))?
        }
    }
    Ok(())
}

/// Checks variable scoping and returns every task expression in the query.
fn collect_tasks(q: &Query) -> Result<Vec<&TaskExpr>, EvalError> {
    let mut scope = HashSet::new();
    let mut tasks = Vec::new();
    for v in &q.vars {
        walk_set(&v.value, &scope, &mut tasks)?;
        scope.insert(v.name.as_str());
    }
    if let Some(p) = &q.pred {
        walk_pred(p, &scope, &mut tasks)?;
    }
    Ok(tasks)
}

// Per-model evaluation.

type TaskSet = BTreeSet<Task>;

struct ModelContext<'a> {
    ev: ModelEvaluator<'a>,
    model: &'a ModelRecord,
    tasks: &'a BTreeMap<String, Task>,
    vars: HashMap<String, TaskSet>,
}

impl ModelContext<'_> {
    fn task(&self, t: &TaskExpr) -> Task {
        self.tasks[&t.to_string()].clone()
    }

    fn set(&self, s: &SetExpr) -> Result<TaskSet, AnalysisError> {
        Ok(match s {
            SetExpr::Var(v) => self.vars[v].clone(),
            SetExpr::AllTasks => self
                .model
                .net
                .observable_labels()
                .into_iter()
                .map(Task::single)
                .collect(),
            SetExpr::Literal(ts) => ts.iter().map(|t| self.task(t)).collect(),
            SetExpr::UnaryConstruction(p, a) => {
                let mut out = TaskSet::new();
                for t in self.set(a)? {
                    if self.ev.unary(*p, &t)? {
                        out.insert(t);
                    }
                }
                out
            }
            SetExpr::BinaryConstruction(p, a, b, q) => {
                let rhs = self.set(b)?;
                let mut out = TaskSet::new();
                for t in self.set(a)? {
                    let keep = match q {
                        Quantifier::All | Quantifier::Each => {
                            all(&rhs, |u| self.ev.binary(*p, &t, u))?
                        }
                        Quantifier::Any | Quantifier::Some => {
                            any(&rhs, |u| self.ev.binary(*p, &t, u))?
                        }
                    };
                    if keep {
                        out.insert(t);
                    }
                }
                out
            }
            SetExpr::Union(parts) => {
                let mut out = TaskSet::new();
                for p in parts {
                    out.extend(self.set(p)?);
                }
                out
            }
            SetExpr::Intersection(parts) => {
                let mut out = self.set(&parts[0])?;
                for p in &parts[1..] {
                    let next = self.set(p)?;
                    out.retain(|t| next.contains(t));
                }
                out
            }
            SetExpr::Difference(a, b) => {
                let right = self.set(b)?;
                let mut out = self.set(a)?;
                out.retain(|t| !right.contains(t));
                out
            }
        })
    }

    fn pred(&self, p: &Predicate) -> Result<bool, AnalysisError> {
        use Predicate as P;
        Ok(match p {
            P::Unary(name, t) => self.ev.unary(*name, &self.task(t))?,
            P::Binary(name, a, b) => self.ev.binary(*name, &self.task(a), &self.task(b))?,
            P::UnaryMacro(name, s, q) => {
                let s = self.set(s)?;
                match q {
                    Quantifier::All | Quantifier::Each => all(&s, |t| self.ev.unary(*name, t))?,
                    Quantifier::Any | Quantifier::Some => any(&s, |t| self.ev.unary(*name, t))?,
                }
            }
            P::BinaryMacroTaskSet(name, t, s, q) => {
                let (t, s) = (self.task(t), self.set(s)?);
                match q {
                    Quantifier::All | Quantifier::Each => {
                        all(&s, |u| self.ev.binary(*name, &t, u))?
                    }
                    Quantifier::Any | Quantifier::Some => {
                        any(&s, |u| self.ev.binary(*name, &t, u))?
                    }
                }
            }
            P::BinaryMacroSetSet(name, a, b, q) => {
                let (a, b) = (self.set(a)?, self.set(b)?);
                let holds = |x: &Task, y: &Task| self.ev.binary(*name, x, y);
                match q {
                    Quantifier::Any => any(&a, |x| any(&b, |y| holds(x, y)))?,
                    Quantifier::Some => any(&a, |x| all(&b, |y| holds(x, y)))?,
                    Quantifier::Each => all(&a, |x| any(&b, |y| holds(x, y)))?,
                    Quantifier::All => all(&a, |x| all(&b, |y| holds(x, y)))?,
                }
            }
            P::In(t, s) => self.set(s)?.contains(&self.task(t)),
            P::Compare(a, op, b) => {
                let (a, b) = (self.set(a)?, self.set(b)?);
                match op {
                    SetComparison::Identical => a == b,
                    SetComparison::Different => a != b,
                    SetComparison::OverlapsWith => !a.is_disjoint(&b),
                    SetComparison::SubsetOf => a.is_subset(&b),
                    SetComparison::ProperSubsetOf => a.is_subset(&b) && a.len() < b.len(),
                }
            }
            P::Truth(v) => *v,
            P::Not(q) => !self.pred(q)?,
            P::And(parts) => all(parts, |q| self.pred(q))?,
            P::Or(parts) => any(parts, |q| self.pred(q))?,
            P::Test(q, t) => {
                let v = self.pred(q)?;
                match t {
                    LogicalTest::IsTrue | LogicalTest::IsNotFalse => v,
                    LogicalTest::IsFalse | LogicalTest::IsNotTrue => !v,
                }
            }
        })
    }
}

/// `∀`, short-circuiting; true on an empty collection.
fn all<'x, T: 'x>(
    items: impl IntoIterator<Item = &'x T>,
    mut f: impl FnMut(&'x T) -> Result<bool, AnalysisError>,
) -> Result<bool, AnalysisError> {
    for x in items {
        if !f(x)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `∃`, short-circuiting; false on an empty collection.
fn any<'x, T: 'x>(
    items: impl IntoIterator<Item = &'x T>,
    mut f: impl FnMut(&'x T) -> Result<bool, AnalysisError>,
) -> Result<bool, AnalysisError> {
    for x in items {
        if f(x)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn row_attributes(q: &Query, repo: &Repository, model: &ModelRecord) -> Vec<(String, String)> {
    let supported = repo.attribute_names();
    let mut names: Vec<String> = Vec::new();
    for a in &q.atts {
        match a {
            Attribute::Universe => names.extend(supported.iter().cloned()),
            Attribute::Name(n) if supported.contains(n) => names.push(n.clone()),
            Attribute::Name(_) => {}
        }
    }
    let mut seen = HashSet::new();
    names
        .into_iter()
        .filter(|n| seen.insert(n.clone()))
        .filter_map(|n| model.attributes.get(&n).map(|v| (n, v.clone())))
        .collect()
}

/// Evaluates `q` against every model of `repo` in a queried location.
///
/// Failures on individual models (state budget, deadline, non-workflow nets)
/// are reported in `errors`; the query itself only fails on scoping or label
/// errors.
pub fn evaluate(
    q: &Query,
    repo: &Repository,
    index: Option<&RelationIndex>,
    opts: &EvalOptions,
) -> Result<QueryResult, EvalError> {
    let vocab = repo.vocabulary();
    let mut task_resolutions = BTreeMap::new();
    for t in collect_tasks(q)? {
        let key = t.to_string();
        if let std::collections::btree_map::Entry::Vacant(e) = task_resolutions.entry(key) {
            e.insert(resolve_task(t, opts.default_threshold, &vocab)?);
        }
    }
    let models: Vec<&ModelRecord> = repo
        .models()
        .filter(|m| {
            q.locs.iter().any(|l| match l {
                Location::Universe => true,
                Location::Path(p) => repo.nested(&m.location, p),
            })
        })
        .collect();
    let tasks = &task_resolutions;
    let outcomes = crate::parallel::map(&models, opts.threads, |m| {
        let mi = if opts.use_index {
            index.and_then(|i| i.model(&m.id))
        } else {
            None
        };
        let mut ctx = ModelContext {
            ev: ModelEvaluator::new(&m.id, &m.net, mi, opts.limits),
            model: m,
            tasks,
            vars: HashMap::new(),
        };
        let outcome = (|| {
            for v in &q.vars {
                let value = ctx.set(&v.value)?;
                ctx.vars.insert(v.name.clone(), value);
            }
            match &q.pred {
                Some(p) => ctx.pred(p),
                None => Ok(true),
            }
        })();
        (outcome, ctx.ev.stats())
    });
    let mut result = QueryResult {
        task_resolutions,
        ..QueryResult::default()
    };
    for (m, (outcome, stats)) in models.iter().zip(outcomes) {
        result.stats.hits += stats.hits;
        result.stats.misses += stats.misses;
        match outcome {
            Ok(true) => result.rows.push(Row {
                model: m.id.clone(),
                attributes: row_attributes(q, repo, m),
            }),
            Ok(false) => {}
            Err(e) => result.errors.push((m.id.clone(), e.to_string())),
        }
    }
    Ok(result)
}
