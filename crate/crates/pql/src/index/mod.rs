//! Precomputed predicate values per model, the record log that stores them,
//! and the background indexer.
//!
//! The log (`index/relations.log`) is a sequence of tab-separated lines:
//!
//! ```text
//! T <model> <θ> <seed> <label>...           task of a seed label at θ
//! U <model> <θ> <predicate> <seed> <0|1>    unary value
//! B <model> <θ> <predicate> <seed> <seed> <0|1>
//! C <model>                                 commits the records above it
//! D <model>                                 drops every earlier record of the model
//! ```
//!
//! Symmetric binary predicates are written once per unordered seed pair (seeds
//! in sorted order), asymmetric ones once per ordered pair. Records of a model
//! only count once its `C` line has been read, so a reader racing a writer sees
//! either the old or the new index. Text fields escape `\`, tab, CR and LF.

mod bot;

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{ErrorKind, Write};

use crate::labels::{similar, LabelError, Vocabulary};
use crate::petri::NetSystem;
use crate::relations::{Analyzer, BinaryPredicate, PairValues, Task, UnaryPredicate};
use crate::repository::{RepoError, Store, StoreLock};
use crate::statespace::{AnalysisError, Limits};

pub use bot::{index_stored_model, run_bot, BotOptions, BotReport};

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// Values for one model at one similarity threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThetaIndex {
    /// Seed label → resolved task.
    pub tasks: BTreeMap<String, Task>,
    pub unary: BTreeMap<(UnaryPredicate, String), bool>,
    /// Symmetric predicates keyed with the seeds in sorted order.
    pub binary: BTreeMap<(BinaryPredicate, String, String), bool>,
}

impl ThetaIndex {
    fn binary_value(&self, p: BinaryPredicate, a: &str, b: &str) -> Option<bool> {
        let (a, b) = if p.is_symmetric() && b < a {
            (b, a)
        } else {
            (a, b)
        };
        self.binary.get(&(p, a.to_string(), b.to_string())).copied()
    }

    pub fn record_count(&self) -> usize {
        self.unary.len() + self.binary.len()
    }
}

/// All thresholds of one model, keyed by the threshold's text form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelIndex {
    pub thetas: BTreeMap<String, ThetaIndex>,
    /// Task → seed per threshold, for lookups by resolved label set.
    lookup: Vec<(String, HashMap<Task, String>)>,
}

impl ModelIndex {
    fn rebuild_lookup(&mut self) {
        self.lookup = self
            .thetas
            .iter()
            .map(|(k, ti)| {
                (
                    k.clone(),
                    ti.tasks
                        .iter()
                        .map(|(s, t)| (t.clone(), s.clone()))
                        .collect(),
                )
            })
            .collect();
    }

    pub fn theta(&self, theta: f64) -> Option<&ThetaIndex> {
        self.thetas.get(&theta.to_string())
    }

    pub fn unary(&self, p: UnaryPredicate, x: &Task) -> Option<bool> {
        self.lookup.iter().find_map(|(k, seeds)| {
            let s = seeds.get(x)?;
            self.thetas[k].unary.get(&(p, s.clone())).copied()
        })
    }

    pub fn binary(&self, p: BinaryPredicate, x: &Task, y: &Task) -> Option<bool> {
        self.lookup.iter().find_map(|(k, seeds)| {
            let (a, b) = (seeds.get(x)?, seeds.get(y)?);
            self.thetas[k].binary_value(p, a, b)
        })
    }

    pub fn record_count(&self) -> usize {
        self.thetas.values().map(ThetaIndex::record_count).sum()
    }

    /// Log lines for `model`, ending with the commit record.
    pub fn to_records(&self, model: &str) -> Vec<String> {
        let m = escape(model);
        let mut out = Vec::new();
        for (theta, ti) in &self.thetas {
            for (seed, task) in &ti.tasks {
                let labels: Vec<String> = task.labels().iter().map(|l| escape(l)).collect();
                out.push(format!(
                    "T\t{m}\t{theta}\t{}\t{}",
                    escape(seed),
                    labels.join("\t")
                ));
            }
            for ((p, s), v) in &ti.unary {
                out.push(format!(
                    "U\t{m}\t{theta}\t{}\t{}\t{}",
                    p.name(),
                    escape(s),
                    u8::from(*v)
                ));
            }
            for ((p, a, b), v) in &ti.binary {
                out.push(format!(
                    "B\t{m}\t{theta}\t{}\t{}\t{}\t{}",
                    p.name(),
                    escape(a),
                    escape(b),
                    u8::from(*v)
                ));
            }
        }
        out.push(format!("C\t{m}"));
        out
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(format!(
                    "bad escape \\{}",
                    other.map(String::from).unwrap_or_default()
                ))
            }
        }
    }
    Ok(out)
}

/// Computes every indexed value of `net`.
///
/// Tasks are seeded by the model's observable labels and resolved against
/// `vocab` (normally the repository vocabulary) plus the model's own labels.
pub fn index_model(
    net: &NetSystem,
    vocab: &Vocabulary,
    thresholds: &[f64],
    limits: &Limits,
) -> Result<ModelIndex, IndexError> {
    limits.check_deadline()?;
    let seeds: Vec<String> = net.observable_labels().into_iter().collect();
    let mut scope = vocab.clone();
    scope.extend(seeds.iter().cloned());
    let analyzer = Analyzer::new(net, *limits);
    let mut unary_cache: HashMap<Task, (bool, bool)> = HashMap::new();
    let mut pair_cache: HashMap<(Task, Task), PairValues> = HashMap::new();
    let mut out = ModelIndex::default();
    for &theta in thresholds {
        let mut ti = ThetaIndex::default();
        for s in &seeds {
            let labels = similar(s, theta, &scope)?;
            ti.tasks.insert(
                s.clone(),
                Task::new(labels).expect("similar() includes the seed"),
            );
        }
        for (s, task) in &ti.tasks {
            let (can, always) = match unary_cache.get(task) {
                Some(v) => *v,
                None => {
                    let v = analyzer.unary_values(task)?;
                    unary_cache.insert(task.clone(), v);
                    v
                }
            };
            ti.unary.insert((UnaryPredicate::CanOccur, s.clone()), can);
            ti.unary
                .insert((UnaryPredicate::AlwaysOccurs, s.clone()), always);
        }
        for (i, a) in seeds.iter().enumerate() {
            for b in &seeds[i..] {
                limits.check_deadline()?;
                let key = (ti.tasks[a].clone(), ti.tasks[b].clone());
                let v = match pair_cache.get(&key) {
                    Some(v) => *v,
                    None => {
                        let v = analyzer.pair_values(&key.0, &key.1)?;
                        pair_cache.insert(key, v);
                        v
                    }
                };
                for p in BinaryPredicate::ALL {
                    ti.binary.insert((p, a.clone(), b.clone()), v.get(p, false));
                    if !p.is_symmetric() && a != b {
                        ti.binary.insert((p, b.clone(), a.clone()), v.get(p, true));
                    }
                }
            }
        }
        out.thetas.insert(theta.to_string(), ti);
    }
    out.rebuild_lookup();
    Ok(out)
}

/// Committed index contents of a store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationIndex {
    models: HashMap<String, ModelIndex>,
}

impl RelationIndex {
    pub fn load(store: &Store) -> Result<RelationIndex, RepoError> {
        let path = store.index_log_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(RelationIndex::default()),
            Err(e) => return Err(RepoError::io(format!("read {}", path.display()), e)),
        };
        Self::parse(&text)
    }

    /// Replays log text. A trailing line without newline is an append in progress
    /// and is ignored.
    pub fn parse(text: &str) -> Result<RelationIndex, RepoError> {
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        let mut committed: HashMap<String, ModelIndex> = HashMap::new();
        let mut pending: HashMap<String, ModelIndex> = HashMap::new();
        for (n, line) in complete.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad =
                |why: String| RepoError::Corrupt(format!("relations.log line {}: {why}", n + 1));
            let fields: Vec<String> = line
                .split('\t')
                .map(unescape)
                .collect::<Result<_, _>>()
                .map_err(bad)?;
            let f: Vec<&str> = fields.iter().map(String::as_str).collect();
            let bool_of = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad(format!("bad value {s:?}"))),
            };
            match f.as_slice() {
                ["C", model] => {
                    let mut mi = pending.remove(*model).unwrap_or_default();
                    mi.rebuild_lookup();
                    committed.insert(model.to_string(), mi);
                }
                ["D", model] => {
                    committed.remove(*model);
                    pending.remove(*model);
                }
                ["T", model, theta, seed, labels @ ..] => {
                    let task = Task::new(labels.iter().copied()).map_err(|e| bad(e.to_string()))?;
                    let ti = pending
                        .entry(model.to_string())
                        .or_default()
                        .thetas
                        .entry(theta.to_string())
                        .or_default();
                    ti.tasks.insert(seed.to_string(), task);
                }
                ["U", model, theta, p, seed, v] => {
                    let p = UnaryPredicate::from_name(p)
                        .ok_or_else(|| bad(format!("unknown predicate {p}")))?;
                    let ti = pending
                        .entry(model.to_string())
                        .or_default()
                        .thetas
                        .entry(theta.to_string())
                        .or_default();
                    ti.unary.insert((p, seed.to_string()), bool_of(v)?);
                }
                ["B", model, theta, p, a, b, v] => {
                    let p = BinaryPredicate::from_name(p)
                        .ok_or_else(|| bad(format!("unknown predicate {p}")))?;
                    let ti = pending
                        .entry(model.to_string())
                        .or_default()
                        .thetas
                        .entry(theta.to_string())
                        .or_default();
                    ti.binary
                        .insert((p, a.to_string(), b.to_string()), bool_of(v)?);
                }
                _ => return Err(bad("unrecognised record".into())),
            }
        }
        Ok(RelationIndex { models: committed })
    }

    /// Adds or replaces a model's index in memory only.
    pub fn insert(&mut self, id: impl Into<String>, index: ModelIndex) {
        self.models.insert(id.into(), index);
    }

    pub fn model(&self, id: &str) -> Option<&ModelIndex> {
        self.models.get(id)
    }

    pub fn model_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.models.keys().map(String::as_str).collect();
        ids.sort_unstable();
        ids
    }

    /// Log text holding only the live records.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for id in self.model_ids() {
            for line in self.models[id].to_records(id) {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }
}

fn append_lines(store: &Store, lines: &[String], _lock: &StoreLock) -> Result<(), RepoError> {
    let path = store.index_log_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| RepoError::io(format!("create {}", dir.display()), e))?;
    }
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| RepoError::io(format!("open {}", path.display()), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| RepoError::io(format!("append {}", path.display()), e))
}

/// Replaces the stored index of `model`.
pub fn write_model_index(store: &Store, model: &str, index: &ModelIndex) -> Result<(), RepoError> {
    let lock = store.lock()?;
    let mut lines = vec![format!("D\t{}", escape(model))];
    lines.extend(index.to_records(model));
    append_lines(store, &lines, &lock)
}

pub(crate) fn append_tombstone(
    store: &Store,
    model: &str,
    lock: &StoreLock,
) -> Result<(), RepoError> {
    if !store.index_log_path().exists() {
        return Ok(());
    }
    append_lines(store, &[format!("D\t{}", escape(model))], lock)
}

/// Rewrites the log without superseded records. Returns (lines before, lines after).
pub fn compact(store: &Store) -> Result<(usize, usize), RepoError> {
    let lock = store.lock()?;
    let path = store.index_log_path();
    let before = fs::read_to_string(&path)
        .map(|t| t.lines().count())
        .unwrap_or(0);
    let text = RelationIndex::load(store)?.render();
    let tmp = path.with_extension("log.tmp");
    fs::write(&tmp, &text).map_err(|e| RepoError::io(format!("write {}", tmp.display()), e))?;
    fs::rename(&tmp, &path).map_err(|e| RepoError::io(format!("rename {}", path.display()), e))?;
    drop(lock);
    Ok((before, text.lines().count()))
}

/// Lookup counters of one evaluator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LookupStats {
    pub hits: usize,
    pub misses: usize,
}

/// Predicate values for one model: index first, fresh computation on a miss.
///
/// Single-threaded by design; evaluation parallelises across models.
pub struct ModelEvaluator<'a> {
    id: &'a str,
    analyzer: Analyzer<'a>,
    index: Option<&'a ModelIndex>,
    unary: RefCell<HashMap<Task, (bool, bool)>>,
    pairs: RefCell<HashMap<(Task, Task), PairValues>>,
    stats: Cell<LookupStats>,
}

impl<'a> ModelEvaluator<'a> {
    pub fn new(
        id: &'a str,
        net: &'a NetSystem,
        index: Option<&'a ModelIndex>,
        limits: Limits,
    ) -> Self {
        ModelEvaluator {
            id,
            analyzer: Analyzer::new(net, limits),
            index,
            unary: RefCell::default(),
            pairs: RefCell::default(),
            stats: Cell::default(),
        }
    }

    pub fn net(&self) -> &NetSystem {
        self.analyzer.net()
    }

    pub fn stats(&self) -> LookupStats {
        self.stats.get()
    }

    fn count(&self, hit: bool) {
        let mut s = self.stats.get();
        if hit {
            s.hits += 1;
        } else {
            s.misses += 1;
        }
        self.stats.set(s);
    }

    fn miss(&self, what: std::fmt::Arguments) {
        self.count(false);
        if self.index.is_some() {
            log::warn!("index miss on model {}: {what}; computing", self.id);
        }
    }

    pub fn unary(&self, p: UnaryPredicate, x: &Task) -> Result<bool, AnalysisError> {
        if let Some(v) = self.index.and_then(|i| i.unary(p, x)) {
            self.count(true);
            return Ok(v);
        }
        if let Some(&(can, always)) = self.unary.borrow().get(x) {
            self.count(true);
            return Ok(if p == UnaryPredicate::CanOccur {
                can
            } else {
                always
            });
        }
        self.miss(format_args!("{p}({x})"));
        let v = self.analyzer.unary_values(x)?;
        self.unary.borrow_mut().insert(x.clone(), v);
        Ok(if p == UnaryPredicate::CanOccur {
            v.0
        } else {
            v.1
        })
    }

    pub fn binary(&self, p: BinaryPredicate, x: &Task, y: &Task) -> Result<bool, AnalysisError> {
        if let Some(v) = self.index.and_then(|i| i.binary(p, x, y)) {
            self.count(true);
            return Ok(v);
        }
        let key = (x.clone(), y.clone());
        if let Some(v) = self.pairs.borrow().get(&key) {
            self.count(true);
            return Ok(v.get(p, false));
        }
        self.miss(format_args!("{p}({x}, {y})"));
        let v = self.analyzer.pair_values(x, y)?;
        self.pairs
            .borrow_mut()
            .insert((y.clone(), x.clone()), v.swap());
        self.pairs.borrow_mut().insert(key, v);
        Ok(v.get(p, false))
    }
}
