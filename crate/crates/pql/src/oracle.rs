//! Brute-force reference semantics.
//!
//! Executions are enumerated by exhaustive depth-first firing and processes by
//! building occurrence nets without any cutoff. The predicates are evaluated
//! straight from their definitions on top of these enumerations, sharing only
//! the net data structure and [`crate::relations::unify`] with the engine.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::petri::{Marking, NetSystem};
use crate::relations::{unify, unify_pair, BinaryPredicate, PairValues, Task, UnaryPredicate};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("the oracle only decides universal predicates on acyclic nets")]
    Cyclic,
    #[error("more than {0} configurations")]
    TooLarge(usize),
}

/// Occurrence sequences from the initial marking to `[o]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Executions {
    pub runs: Vec<Vec<usize>>,
    /// No run was cut short by the length bound.
    pub complete: bool,
}

fn final_marking(net: &NetSystem) -> Option<Marking> {
    let wf = net.is_workflow().ok()?;
    let mut m = Marking::empty(net.place_count());
    m.set(wf.sink, 1);
    Some(m)
}

/// All executions with at most `max_len` firings (silent ones included).
pub fn enumerate_executions(net: &NetSystem, max_len: usize) -> Executions {
    let mut out = Executions {
        runs: Vec::new(),
        complete: true,
    };
    let Some(fin) = final_marking(net) else {
        return out;
    };
    let mut path = Vec::new();
    dfs(
        net,
        net.initial_marking().clone(),
        &fin,
        max_len,
        &mut path,
        &mut out,
    );
    out
}

fn dfs(
    net: &NetSystem,
    m: Marking,
    fin: &Marking,
    max_len: usize,
    path: &mut Vec<usize>,
    out: &mut Executions,
) {
    if m == *fin {
        out.runs.push(path.clone());
    }
    let enabled: Vec<usize> = net.enabled_transitions(&m).collect();
    if enabled.is_empty() {
        return;
    }
    if path.len() == max_len {
        out.complete = false;
        return;
    }
    for t in enabled {
        path.push(t);
        dfs(net, net.fire_unchecked(&m, t), fin, max_len, path, out);
        path.pop();
    }
}

/// One process: its events (by transition) and the causality relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub events: Vec<usize>,
    /// `causes[a][b]` iff event `a` causes event `b`.
    pub causes: Vec<Vec<bool>>,
}

impl Process {
    pub fn concurrent(&self, a: usize, b: usize) -> bool {
        !self.causes[a][b] && !self.causes[b][a]
    }

    /// Pairs of distinct events with `first(ρ(a))` and `second(ρ(b))`.
    fn pairs<'a>(
        &'a self,
        first: &'a dyn Fn(usize) -> bool,
        second: &'a dyn Fn(usize) -> bool,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        let n = self.events.len();
        (0..n)
            .flat_map(move |a| (0..n).map(move |b| (a, b)))
            .filter(move |&(a, b)| a != b && first(self.events[a]) && second(self.events[b]))
    }
}

#[derive(Debug, Clone)]
pub struct Processes {
    pub processes: Vec<Process>,
    pub complete: bool,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum CondKey {
    Initial(usize, u32),
    Produced(usize, usize),
}

struct Occurrences {
    conditions: Vec<(usize, Option<usize>)>,
    cond_index: HashMap<CondKey, usize>,
    events: Vec<(usize, Vec<usize>)>,
    event_index: HashMap<(usize, Vec<usize>), usize>,
}

impl Occurrences {
    fn condition(&mut self, key: CondKey, place: usize, pre: Option<usize>) -> usize {
        if let Some(&c) = self.cond_index.get(&key) {
            return c;
        }
        let c = self.conditions.len();
        self.conditions.push((place, pre));
        self.cond_index.insert(key, c);
        c
    }

    fn event(&mut self, t: usize, preset: Vec<usize>) -> usize {
        if let Some(&e) = self.event_index.get(&(t, preset.clone())) {
            return e;
        }
        let e = self.events.len();
        self.events.push((t, preset.clone()));
        self.event_index.insert((t, preset), e);
        e
    }
}

/// Every process ending in `[o]` of an acyclic net.
pub fn enumerate_processes(net: &NetSystem) -> Result<Processes, OracleError> {
    if net.is_cyclic() {
        return Err(OracleError::Cyclic);
    }
    enumerate_processes_bounded(net, usize::MAX, DEFAULT_CONFIGURATION_BUDGET)
}

/// Configurations visited before the oracle gives up.
pub const DEFAULT_CONFIGURATION_BUDGET: usize = 1_000_000;

/// Processes ending in `[o]` with at most `max_events` events.
pub fn enumerate_processes_bounded(
    net: &NetSystem,
    max_events: usize,
    budget: usize,
) -> Result<Processes, OracleError> {
    let mut processes = Vec::new();
    let complete = search_processes(net, max_events, budget, &mut |pi| {
        processes.push(pi.clone());
        false
    })?
    .complete;
    Ok(Processes {
        processes,
        complete,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    pub found: bool,
    /// No configuration was cut off by the event bound.
    pub complete: bool,
}

/// Depth-first search over configurations, calling `visit` on every process
/// that ends in `[o]` and stopping as soon as it returns `true`.
///
/// Events are named by their transition and input conditions, so each
/// configuration is visited once regardless of interleaving.
pub fn search_processes(
    net: &NetSystem,
    max_events: usize,
    budget: usize,
    visit: &mut dyn FnMut(&Process) -> bool,
) -> Result<SearchOutcome, OracleError> {
    let mut outcome = SearchOutcome {
        found: false,
        complete: true,
    };
    let Some(fin) = final_marking(net) else {
        return Ok(outcome);
    };
    let mut occ = Occurrences {
        conditions: Vec::new(),
        cond_index: HashMap::new(),
        events: Vec::new(),
        event_index: HashMap::new(),
    };
    let mut cut = Vec::new();
    let m0 = net.initial_marking();
    for p in 0..net.place_count() {
        for k in 0..m0.get(p) {
            cut.push(occ.condition(CondKey::Initial(p, k), p, None));
        }
    }
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut stack: Vec<(Vec<u32>, Vec<usize>)> = vec![(Vec::new(), cut)];
    while let Some((config, cut)) = stack.pop() {
        if seen.contains(&config) {
            continue;
        }
        if seen.len() >= budget {
            return Err(OracleError::TooLarge(budget));
        }
        seen.insert(config.clone());
        let mut marking = Marking::empty(net.place_count());
        for &c in &cut {
            marking.add(occ.conditions[c].0, 1);
        }
        if marking == fin && visit(&process_of(&occ, &config)) {
            outcome.found = true;
            return Ok(outcome);
        }
        let enabled: Vec<usize> = net.enabled_transitions(&marking).collect();
        if enabled.is_empty() {
            continue;
        }
        if config.len() >= max_events {
            outcome.complete = false;
            continue;
        }
        for t in enabled {
            for preset in token_choices(net, &occ, &cut, t) {
                let e = occ.event(t, preset.clone());
                let mut next_cut: Vec<usize> = cut
                    .iter()
                    .copied()
                    .filter(|c| !preset.contains(c))
                    .collect();
                for &p in &net.transition(t).postset {
                    next_cut.push(occ.condition(CondKey::Produced(e, p), p, Some(e)));
                }
                next_cut.sort_unstable();
                let mut next = config.clone();
                let at = next.partition_point(|&x| x < e as u32);
                next.insert(at, e as u32);
                stack.push((next, next_cut));
            }
        }
    }
    Ok(outcome)
}

/// Every way of picking one cut condition per input place of `t`.
fn token_choices(net: &NetSystem, occ: &Occurrences, cut: &[usize], t: usize) -> Vec<Vec<usize>> {
    let mut choices: Vec<Vec<usize>> = vec![Vec::new()];
    for &p in &net.transition(t).preset {
        let here: Vec<usize> = cut
            .iter()
            .copied()
            .filter(|&c| occ.conditions[c].0 == p)
            .collect();
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                here.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    for c in &mut choices {
        c.sort_unstable();
    }
    choices
}

fn process_of(occ: &Occurrences, config: &[u32]) -> Process {
    let ids: Vec<usize> = config.iter().map(|&e| e as usize).collect();
    let pos: HashMap<usize, usize> = ids.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let n = ids.len();
    let mut causes = vec![vec![false; n]; n];
    for (k, &e) in ids.iter().enumerate() {
        for &c in &occ.events[e].1 {
            if let Some(pre) = occ.conditions[c].1 {
                causes[pos[&pre]][k] = true;
            }
        }
    }
    // Transitive closure.
    for m in 0..n {
        for a in 0..n {
            if causes[a][m] {
                for b in 0..n {
                    if causes[m][b] {
                        causes[a][b] = true;
                    }
                }
            }
        }
    }
    Process {
        events: ids.iter().map(|&e| occ.events[e].0).collect(),
        causes,
    }
}

/// Unary or binary predicate name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predicate {
    Unary(UnaryPredicate),
    Binary(BinaryPredicate),
}

/// Distinct sets of observable labels over all executions. Runs are explored
/// depth-first; two prefixes reaching the same marking with the same labels
/// seen have the same completions, so only one is continued.
pub fn execution_label_sets(net: &NetSystem) -> BTreeSet<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    let Some(fin) = final_marking(net) else {
        return out;
    };
    let mut seen: HashSet<(Marking, BTreeSet<String>)> = HashSet::new();
    let mut stack = vec![(net.initial_marking().clone(), BTreeSet::new())];
    while let Some((m, labels)) = stack.pop() {
        if !seen.insert((m.clone(), labels.clone())) {
            continue;
        }
        if m == fin {
            out.insert(labels.clone());
        }
        for t in net.enabled_transitions(&m) {
            let mut next = labels.clone();
            let l = &net.transition(t).label;
            if !l.is_empty() {
                next.insert(l.clone());
            }
            stack.push((net.fire_unchecked(&m, t), next));
        }
    }
    out
}

/// Unary predicate from its definition over all label executions.
pub fn oracle_unary(net: &NetSystem, p: UnaryPredicate, x: &Task) -> Result<bool, OracleError> {
    if net.is_cyclic() {
        return Err(OracleError::Cyclic);
    }
    let u = unify(net, x);
    let Some(tx) = u.solitary[0] else {
        return Ok(false);
    };
    let s = &u.system;
    let lx = s.transition(tx).label.clone();
    let etas = execution_label_sets(s);
    Ok(match p {
        UnaryPredicate::CanOccur => etas.iter().any(|e| e.contains(&lx)),
        UnaryPredicate::AlwaysOccurs => etas.iter().all(|e| e.contains(&lx)),
    })
}

/// All six binary values for `(X, Y)`, each from its definition.
pub fn oracle_pair(net: &NetSystem, x: &Task, y: &Task) -> Result<PairValues, OracleError> {
    if net.is_cyclic() {
        return Err(OracleError::Cyclic);
    }
    let u = unify_pair(net, x, y);
    let (Some(tx), Some(ty)) = (u.solitary[0], u.solitary[1]) else {
        return Ok(PairValues::default());
    };
    let s = &u.system;
    let (lx, ly) = (
        s.transition(tx).label.clone(),
        s.transition(ty).label.clone(),
    );
    let etas = execution_label_sets(s);
    let occurs = |l: &str| etas.iter().any(|e| e.contains(l));
    // Implicit condition of every binary predicate: both tasks can occur.
    if !occurs(&lx) || !occurs(&ly) {
        return Ok(PairValues::default());
    }
    let can_conflict = |a: &str, b: &str| etas.iter().any(|e| e.contains(a) && !e.contains(b));
    let is_x = |t: usize| s.transition(t).label == lx;
    let is_y = |t: usize| s.transition(t).label == ly;
    // Whether no process of Δ_S(a, b) has a pair of distinct a/b events breaking `holds`.
    // Unifying a label that repeats along a path closes a structural cycle
    // through the solitary step, but behaviour stays finite, so no event bound.
    let universal = |a: &dyn Fn(usize) -> bool,
                     b: &dyn Fn(usize) -> bool,
                     holds: &dyn Fn(&Process, usize, usize) -> bool|
     -> Result<bool, OracleError> {
        let mut violates = |pi: &Process| pi.pairs(a, b).any(|(e1, e2)| !holds(pi, e1, e2));
        Ok(!search_processes(s, usize::MAX, DEFAULT_CONFIGURATION_BUDGET, &mut violates)?.found)
    };
    let causal = |pi: &Process, a: usize, b: usize| pi.causes[a][b];
    let concurrent = |pi: &Process, a: usize, b: usize| pi.concurrent(a, b);
    Ok(PairValues {
        can_conflict_xy: can_conflict(&lx, &ly),
        can_conflict_yx: can_conflict(&ly, &lx),
        can_cooccur: etas.iter().any(|e| e.contains(&lx) && e.contains(&ly)),
        total_causal_xy: universal(&is_x, &is_y, &causal)?,
        total_causal_yx: universal(&is_y, &is_x, &causal)?,
        total_concurrent: universal(&is_x, &is_y, &concurrent)?,
    })
}

pub fn oracle_binary(
    net: &NetSystem,
    p: BinaryPredicate,
    x: &Task,
    y: &Task,
) -> Result<bool, OracleError> {
    Ok(oracle_pair(net, x, y)?.get(p, false))
}

pub fn oracle_predicate(
    net: &NetSystem,
    p: Predicate,
    x: &Task,
    y: Option<&Task>,
) -> Result<bool, OracleError> {
    match (p, y) {
        (Predicate::Unary(u), _) => oracle_unary(net, u, x),
        (Predicate::Binary(b), Some(y)) => oracle_binary(net, b, x, y),
        (Predicate::Binary(b), None) => oracle_binary(net, b, x, x),
    }
}

/// Process-level transition relations over `Ξ_S(t1, t2)`.
pub fn transitions_total_causal(processes: &[Process], t1: usize, t2: usize) -> bool {
    let (f, g) = (move |t: usize| t == t1, move |t: usize| t == t2);
    processes
        .iter()
        .all(|pi| pi.pairs(&f, &g).all(|(a, b)| pi.causes[a][b]))
}

pub fn transitions_total_concurrent(processes: &[Process], t1: usize, t2: usize) -> bool {
    let (f, g) = (move |t: usize| t == t1, move |t: usize| t == t2);
    processes
        .iter()
        .all(|pi| pi.pairs(&f, &g).all(|(a, b)| pi.concurrent(a, b)))
}

/// What bounded exploration of a possibly cyclic net proves about a task pair.
/// Each flag is an existential fact backed by a concrete run or process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Witnesses {
    pub x_occurs: bool,
    pub x_missing: bool,
    pub cooccur: bool,
    pub x_without_y: bool,
    pub y_without_x: bool,
    /// Some run fires `y` and later `x`.
    pub y_then_x: bool,
    pub x_then_y: bool,
    /// Some process has an `x` event and a `y` event related by causality.
    pub causal_pair: bool,
    pub complete: bool,
}

pub fn bounded_witnesses(net: &NetSystem, x: &Task, y: &Task, max_len: usize) -> Witnesses {
    let mut w = Witnesses::default();
    let u = unify_pair(net, x, y);
    let (Some(tx), Some(ty)) = (u.solitary[0], u.solitary[1]) else {
        return w;
    };
    let s = &u.system;
    let ex = enumerate_executions(s, max_len);
    w.complete = ex.complete;
    for run in &ex.runs {
        let fx: Vec<usize> = (0..run.len()).filter(|&k| run[k] == tx).collect();
        let fy: Vec<usize> = (0..run.len()).filter(|&k| run[k] == ty).collect();
        w.x_occurs |= !fx.is_empty();
        w.x_missing |= fx.is_empty();
        w.cooccur |= !fx.is_empty() && !fy.is_empty();
        w.x_without_y |= !fx.is_empty() && fy.is_empty();
        w.y_without_x |= fx.is_empty() && !fy.is_empty();
        w.y_then_x |= fy.first().zip(fx.last()).is_some_and(|(a, b)| a < b);
        w.x_then_y |= fx.first().zip(fy.last()).is_some_and(|(a, b)| a < b);
    }
    let (f, g) = (move |t: usize| t == tx, move |t: usize| t == ty);
    let mut causal = |pi: &Process| pi.pairs(&f, &g).any(|(a, b)| !pi.concurrent(a, b));
    match search_processes(s, max_len, DEFAULT_CONFIGURATION_BUDGET, &mut causal) {
        Ok(out) => {
            w.causal_pair = out.found;
            w.complete &= out.complete || out.found;
        }
        Err(_) => w.complete = false,
    }
    w
}
