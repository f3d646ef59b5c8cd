//! Label unification and the eight task-level predicates.

use std::cell::OnceCell;
use std::collections::BTreeSet;
use std::fmt;

use crate::petri::{NetBuilder, NetSystem};
use crate::statespace::{build_graph, AnalysisError, Limits, ReachabilityGraph};
use crate::unfolding::{build_prefix, Prefix};

/// Labels of fresh solitary transitions start with this; it never occurs in PNML input
/// produced by modelling tools.
pub const RESERVED_LABEL_PREFIX: &str = "<unify:";

/// A non-empty set of non-empty labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Task(BTreeSet<String>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("a task needs at least one label")]
    Empty,
    #[error("task labels must be non-empty")]
    EmptyLabel,
}

impl Task {
    pub fn new<I, S>(labels: I) -> Result<Task, TaskError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(TaskError::Empty);
        }
        if set.iter().any(|l| l.is_empty()) {
            return Err(TaskError::EmptyLabel);
        }
        Ok(Task(set))
    }

    pub fn single(label: impl Into<String>) -> Task {
        let l = label.into();
        assert!(!l.is_empty(), "task labels must be non-empty");
        Task(BTreeSet::from([l]))
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }

    fn matches(&self, net: &NetSystem) -> Vec<usize> {
        (0..net.transition_count())
            .filter(|&t| self.0.contains(&net.transition(t).label))
            .collect()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let quoted: Vec<String> = self.0.iter().map(|l| format!("{l:?}")).collect();
        write!(f, "{{{}}}", quoted.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryPredicate {
    CanOccur,
    AlwaysOccurs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryPredicate {
    CanConflict,
    CanCooccur,
    Conflict,
    Cooccur,
    TotalCausal,
    TotalConcurrent,
}

impl UnaryPredicate {
    pub const ALL: [UnaryPredicate; 2] = [UnaryPredicate::CanOccur, UnaryPredicate::AlwaysOccurs];

    pub fn name(self) -> &'static str {
        match self {
            UnaryPredicate::CanOccur => "CanOccur",
            UnaryPredicate::AlwaysOccurs => "AlwaysOccurs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl BinaryPredicate {
    pub const ALL: [BinaryPredicate; 6] = [
        BinaryPredicate::CanConflict,
        BinaryPredicate::CanCooccur,
        BinaryPredicate::Conflict,
        BinaryPredicate::Cooccur,
        BinaryPredicate::TotalCausal,
        BinaryPredicate::TotalConcurrent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryPredicate::CanConflict => "CanConflict",
            BinaryPredicate::CanCooccur => "CanCooccur",
            BinaryPredicate::Conflict => "Conflict",
            BinaryPredicate::Cooccur => "Cooccur",
            BinaryPredicate::TotalCausal => "TotalCausal",
            BinaryPredicate::TotalConcurrent => "TotalConcurrent",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// `p(X, Y) = p(Y, X)` for every system.
    pub fn is_symmetric(self) -> bool {
        !matches!(
            self,
            BinaryPredicate::CanConflict | BinaryPredicate::TotalCausal
        )
    }
}

impl fmt::Display for UnaryPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for BinaryPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of unifying one or two tasks.
#[derive(Debug, Clone)]
pub struct Unified {
    pub system: NetSystem,
    /// Solitary transition per task; `None` when the task matches nothing.
    pub solitary: Vec<Option<usize>>,
    /// Original transitions replaced by the construction (they no longer occur).
    pub forbidden: Vec<String>,
}

impl Unified {
    pub fn is_identity(&self) -> bool {
        self.forbidden.is_empty()
    }
}

/// Single solitary transition for `task`.
pub fn unify(net: &NetSystem, task: &Task) -> Unified {
    unify_tasks(net, &[task])
}

/// Joint unification of two tasks.
///
/// Every transition matching either task is split into a silent `in`, the
/// solitary step of each task it matches, and a silent `out`, so a transition
/// whose label lies in both tasks yields one `x̂` and one `ŷ` occurrence. For
/// disjoint tasks this equals unifying one task after the other, in either order.
pub fn unify_pair(net: &NetSystem, x: &Task, y: &Task) -> Unified {
    unify_tasks(net, &[x, y])
}

fn unify_tasks(net: &NetSystem, tasks: &[&Task]) -> Unified {
    let matches: Vec<Vec<usize>> = tasks.iter().map(|t| t.matches(net)).collect();
    let shared = |t: usize, i: usize| {
        matches
            .iter()
            .enumerate()
            .any(|(j, m)| j != i && m.contains(&t))
    };
    let transform: Vec<bool> = matches
        .iter()
        .enumerate()
        .map(|(i, m)| m.len() > 1 || m.iter().any(|&t| shared(t, i)))
        .collect();
    if !transform.iter().any(|&b| b) {
        return Unified {
            system: net.clone(),
            solitary: matches.iter().map(|m| m.first().copied()).collect(),
            forbidden: Vec::new(),
        };
    }

    let rewritten: BTreeSet<usize> = matches
        .iter()
        .zip(&transform)
        .filter(|(_, &tr)| tr)
        .flat_map(|(m, _)| m.iter().copied())
        .collect();
    let mut b = NetBuilder::new();
    for (p, id) in net.places().iter().enumerate() {
        b.place(id.clone(), net.initial_marking().get(p));
    }
    for (k, t) in net.transitions().iter().enumerate() {
        if rewritten.contains(&k) {
            continue;
        }
        b.transition(t.id.clone(), t.label.clone());
        for &p in &t.preset {
            b.arc(net.place_id(p), t.id.clone());
        }
        for &p in &t.postset {
            b.arc(t.id.clone(), net.place_id(p));
        }
    }

    let labels: BTreeSet<&str> = net.transitions().iter().map(|t| t.label.as_str()).collect();
    let mut hats: Vec<Option<(String, String, String)>> = Vec::new();
    for (i, &tr) in transform.iter().enumerate() {
        if !tr {
            hats.push(None);
            continue;
        }
        let tag = ["x", "y"].get(i).copied().unwrap_or("z");
        let mut label = format!("{RESERVED_LABEL_PREFIX}{tag}>");
        while labels.contains(label.as_str()) {
            label.push('\'');
        }
        let pin = fresh(net, &b, &format!("p_{tag}"));
        b.place(pin.clone(), 0);
        let pout = fresh(net, &b, &format!("r_{tag}"));
        b.place(pout.clone(), 0);
        let hat = fresh(net, &b, &format!("t_{tag}"));
        b.transition(hat.clone(), label)
            .arc(pin.clone(), hat.clone())
            .arc(hat.clone(), pout.clone());
        hats.push(Some((pin, pout, hat)));
    }
    for &t in &rewritten {
        let tr = net.transition(t);
        let q = fresh(net, &b, &format!("q_{}", tr.id));
        b.place(q.clone(), 0);
        let tin = fresh(net, &b, &format!("in_{}", tr.id));
        b.transition(tin.clone(), "").arc(tin.clone(), q.clone());
        let tout = fresh(net, &b, &format!("out_{}", tr.id));
        b.transition(tout.clone(), "").arc(q, tout.clone());
        for &p in &tr.preset {
            b.arc(net.place_id(p), tin.clone());
        }
        for &p in &tr.postset {
            b.arc(tout.clone(), net.place_id(p));
        }
        for (i, hat) in hats.iter().enumerate() {
            if let Some((pin, pout, _)) = hat {
                if matches[i].contains(&t) {
                    b.arc(tin.clone(), pin.clone())
                        .arc(pout.clone(), tout.clone());
                }
            }
        }
    }
    let system = b.build().expect("unification only adds fresh nodes");
    let solitary = matches
        .iter()
        .zip(&hats)
        .map(|(m, hat)| match hat {
            Some((_, _, id)) => Some(system.find_transition(id).expect("solitary exists")),
            None => m
                .first()
                .map(|&t| system.find_transition(&net.transition(t).id).expect("kept")),
        })
        .collect();
    let forbidden = rewritten
        .iter()
        .map(|&t| net.transition(t).id.clone())
        .collect();
    Unified {
        system,
        solitary,
        forbidden,
    }
}

fn fresh(net: &NetSystem, b: &NetBuilder, base: &str) -> String {
    let first = net.fresh_id(base);
    if !b.has_node(&first) {
        return first;
    }
    (1..)
        .map(|i| format!("{base}#u{i}"))
        .find(|s| !b.has_node(s) && net.fresh_id(s) == *s)
        .unwrap()
}

/// All six binary values for an ordered pair of tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairValues {
    pub can_conflict_xy: bool,
    pub can_conflict_yx: bool,
    pub can_cooccur: bool,
    pub total_causal_xy: bool,
    pub total_causal_yx: bool,
    pub total_concurrent: bool,
}

impl PairValues {
    /// Value of `p(X, Y)`, or of `p(Y, X)` when `swapped`.
    pub fn get(&self, p: BinaryPredicate, swapped: bool) -> bool {
        let (cc_xy, cc_yx, tc_xy) = if swapped {
            (
                self.can_conflict_yx,
                self.can_conflict_xy,
                self.total_causal_yx,
            )
        } else {
            (
                self.can_conflict_xy,
                self.can_conflict_yx,
                self.total_causal_xy,
            )
        };
        match p {
            BinaryPredicate::CanConflict => cc_xy,
            BinaryPredicate::CanCooccur => self.can_cooccur,
            BinaryPredicate::Conflict => cc_xy && cc_yx && !self.can_cooccur,
            BinaryPredicate::Cooccur => !cc_xy && !cc_yx && self.can_cooccur,
            BinaryPredicate::TotalCausal => tc_xy,
            BinaryPredicate::TotalConcurrent => self.total_concurrent,
        }
    }

    pub fn swap(&self) -> PairValues {
        PairValues {
            can_conflict_xy: self.can_conflict_yx,
            can_conflict_yx: self.can_conflict_xy,
            can_cooccur: self.can_cooccur,
            total_causal_xy: self.total_causal_yx,
            total_causal_yx: self.total_causal_xy,
            total_concurrent: self.total_concurrent,
        }
    }
}

/// Evaluates predicates on one system, reusing the state space and prefix of
/// the unmodified net whenever unification is the identity.
pub struct Analyzer<'a> {
    net: &'a NetSystem,
    limits: Limits,
    graph: OnceCell<ReachabilityGraph>,
    prefix: OnceCell<Prefix>,
}

impl<'a> Analyzer<'a> {
    pub fn new(net: &'a NetSystem, limits: Limits) -> Self {
        Analyzer {
            net,
            limits,
            graph: OnceCell::new(),
            prefix: OnceCell::new(),
        }
    }

    pub fn net(&self) -> &NetSystem {
        self.net
    }

    fn base_graph(&self) -> Result<&ReachabilityGraph, AnalysisError> {
        if let Some(g) = self.graph.get() {
            return Ok(g);
        }
        let g = build_graph(self.net, &self.limits)?;
        Ok(self.graph.get_or_init(|| g))
    }

    fn base_prefix(&self) -> Result<&Prefix, AnalysisError> {
        if let Some(p) = self.prefix.get() {
            return Ok(p);
        }
        let p = build_prefix(self.net, &self.limits)?;
        Ok(self.prefix.get_or_init(|| p))
    }

    /// `(canOccur, alwaysOccurs)`.
    pub fn unary_values(&self, x: &Task) -> Result<(bool, bool), AnalysisError> {
        let u = unify(self.net, x);
        let Some(t) = u.solitary[0] else {
            return Ok((false, false));
        };
        let owned = if u.is_identity() {
            None
        } else {
            Some(build_graph(&u.system, &self.limits)?)
        };
        let g = match &owned {
            Some(g) => g,
            None => self.base_graph()?,
        };
        Ok((g.can_occur_t(t)?, g.always_occurs_t(t)?))
    }

    pub fn unary(&self, p: UnaryPredicate, x: &Task) -> Result<bool, AnalysisError> {
        let (can, always) = self.unary_values(x)?;
        Ok(match p {
            UnaryPredicate::CanOccur => can,
            UnaryPredicate::AlwaysOccurs => always,
        })
    }

    /// Values for `(X, Y)`; every predicate is false when a task matches nothing.
    pub fn pair_values(&self, x: &Task, y: &Task) -> Result<PairValues, AnalysisError> {
        let u = unify_pair(self.net, x, y);
        let (Some(tx), Some(ty)) = (u.solitary[0], u.solitary[1]) else {
            return Ok(PairValues::default());
        };
        let identity = u.is_identity();
        let owned = if identity {
            None
        } else {
            Some(build_graph(&u.system, &self.limits)?)
        };
        let g = match &owned {
            Some(g) => g,
            None => self.base_graph()?,
        };
        let flags = g.final_flags(tx, ty)?;
        let can_occur_x = flags[1] || flags[3];
        let can_occur_y = flags[2] || flags[3];
        if !can_occur_x || !can_occur_y {
            return Ok(PairValues::default());
        }
        let owned_prefix = if identity {
            None
        } else {
            Some(build_prefix(&u.system, &self.limits)?)
        };
        let prefix = match &owned_prefix {
            Some(p) => p,
            None => self.base_prefix()?,
        };
        self.limits.check_deadline()?;
        Ok(PairValues {
            can_conflict_xy: flags[1],
            can_conflict_yx: flags[2],
            can_cooccur: flags[3],
            total_causal_xy: g.total_causal_t(tx, ty)?,
            total_causal_yx: g.total_causal_t(ty, tx)?,
            total_concurrent: prefix.total_concurrent(tx, ty)?,
        })
    }

    pub fn binary(&self, p: BinaryPredicate, x: &Task, y: &Task) -> Result<bool, AnalysisError> {
        Ok(self.pair_values(x, y)?.get(p, false))
    }
}

pub fn evaluate_unary(
    net: &NetSystem,
    p: UnaryPredicate,
    x: &Task,
    limits: &Limits,
) -> Result<bool, AnalysisError> {
    Analyzer::new(net, *limits).unary(p, x)
}

pub fn evaluate_binary(
    net: &NetSystem,
    p: BinaryPredicate,
    x: &Task,
    y: &Task,
    limits: &Limits,
) -> Result<bool, AnalysisError> {
    Analyzer::new(net, *limits).binary(p, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::statespace::build_graph;

    fn task(labels: &[&str]) -> Task {
        Task::new(labels.iter().copied()).unwrap()
    }

    #[test]
    fn f5_table() {
        let net = fixtures::f5();
        let a = Analyzer::new(&net, Limits::default());
        let u = |p, l: &[&str]| a.unary(p, &task(l)).unwrap();
        let b = |p, x: &[&str], y: &[&str]| a.binary(p, &task(x), &task(y)).unwrap();
        use BinaryPredicate::*;
        use UnaryPredicate::*;
        assert!(u(CanOccur, &["a1"]));
        assert!(!u(AlwaysOccurs, &["a1"]));
        for l in ["b", "c", "d", "e"] {
            assert!(u(AlwaysOccurs, &[l]));
        }
        assert!(b(CanConflict, &["b"], &["a1"]));
        assert!(b(CanCooccur, &["b"], &["a1"]));
        assert!(b(Conflict, &["a1"], &["a2"]));
        assert!(b(Cooccur, &["b"], &["e"]));
        assert!(b(TotalCausal, &["a1"], &["c"]));
        assert!(b(TotalConcurrent, &["c"], &["d"]));
        assert!(u(AlwaysOccurs, &["a1", "a2"]));
        assert!(!b(Conflict, &["b"], &["e"]));
        assert!(!b(TotalConcurrent, &["b"], &["c"]));
        assert!(!b(TotalCausal, &["c"], &["d"]));
        assert!(!b(TotalCausal, &["e"], &["b"]));
        assert!(b(TotalCausal, &["b"], &["e"]));
    }

    #[test]
    fn unify_shapes() {
        let net = fixtures::f5();
        let u = unify(&net, &task(&["b"]));
        assert!(u.is_identity());
        assert_eq!(u.system.transition(u.solitary[0].unwrap()).id, "t_b");
        let u = unify(&net, &task(&["a1"]));
        assert_eq!(u.system.transition(u.solitary[0].unwrap()).id, "t_a1");
        let u = unify(&net, &task(&["a1", "a2"]));
        assert_eq!(u.forbidden, vec!["t_a1", "t_a2"]);
        let hat = u.system.transition(u.solitary[0].unwrap());
        assert!(hat.label.starts_with(RESERVED_LABEL_PREFIX));
        assert_eq!(
            u.system
                .transitions()
                .iter()
                .filter(|t| t.label == hat.label)
                .count(),
            1
        );
        let g = build_graph(&u.system, &Limits::default()).unwrap();
        assert!(g.always_occurs_t(u.solitary[0].unwrap()).unwrap());
        assert!(u.system.is_workflow().is_ok());
        assert!(unify(&net, &task(&["zz"])).solitary[0].is_none());
    }

    #[test]
    fn unmatched_tasks_make_everything_false() {
        let net = fixtures::f5();
        let a = Analyzer::new(&net, Limits::default());
        assert_eq!(a.unary_values(&task(&["zz"])).unwrap(), (false, false));
        for p in BinaryPredicate::ALL {
            assert!(!a.binary(p, &task(&["zz"]), &task(&["b"])).unwrap());
            assert!(!a.binary(p, &task(&["b"]), &task(&["zz"])).unwrap());
        }
    }

    #[test]
    fn overlapping_tasks_keep_shared_occurrences() {
        // X = {a1, a2} and Y = {a2, b}: every execution contains an X and a Y occurrence.
        let net = fixtures::f5();
        let a = Analyzer::new(&net, Limits::default());
        let (x, y) = (task(&["a1", "a2"]), task(&["a2", "b"]));
        let v = a.pair_values(&x, &y).unwrap();
        assert!(v.get(BinaryPredicate::Cooccur, false));
        assert_eq!(a.pair_values(&y, &x).unwrap(), v.swap());
        // A task paired with itself: both solitary steps come from the same occurrence.
        let v = a.pair_values(&task(&["c"]), &task(&["c"])).unwrap();
        assert!(v.can_cooccur && v.total_concurrent && !v.total_causal_xy);
    }

    #[test]
    fn loop_predicates() {
        let net = fixtures::f_loop();
        let a = Analyzer::new(&net, Limits::default());
        let v = a.pair_values(&task(&["s"]), &task(&["l"])).unwrap();
        assert!(!v.can_conflict_yx && v.can_conflict_xy && v.can_cooccur);
        assert!(v.total_causal_xy && !v.total_causal_yx && !v.total_concurrent);
        let v = a.pair_values(&task(&["l"]), &task(&["f"])).unwrap();
        assert!(v.total_causal_xy && !v.total_concurrent);
    }

    #[test]
    fn predicate_names_round_trip() {
        for p in UnaryPredicate::ALL {
            assert_eq!(UnaryPredicate::from_name(p.name()), Some(p));
        }
        for p in BinaryPredicate::ALL {
            assert_eq!(BinaryPredicate::from_name(p.name()), Some(p));
        }
        assert_eq!(BinaryPredicate::from_name("conflict"), None);
    }

    #[test]
    fn task_validation() {
        assert_eq!(Task::new(Vec::<String>::new()), Err(TaskError::Empty));
        assert_eq!(Task::new(["a", ""]), Err(TaskError::EmptyLabel));
        assert_eq!(task(&["b", "a", "b"]).to_string(), r#"{"a","b"}"#);
    }
}
