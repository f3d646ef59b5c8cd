//! Explicit reachability graphs and the transition-level predicates decided on them.

use std::collections::{HashMap, HashSet, VecDeque};
use std::time::Instant;

use crate::petri::{Marking, NetSystem, WorkflowViolation};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("state budget exceeded ({0} states)")]
    StateBudgetExceeded(usize),
    #[error("time budget exceeded")]
    DeadlineExceeded,
    #[error("not a workflow system: {0}")]
    NotWorkflow(String),
    #[error("net is unbounded (witness: {})", .witness.join(" "))]
    Unbounded { witness: Vec<String> },
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
    #[error("the two transitions must differ")]
    SameTransition,
    #[error("operation requires an acyclic net")]
    Cyclic,
}

impl From<WorkflowViolation> for AnalysisError {
    fn from(v: WorkflowViolation) -> Self {
        AnalysisError::NotWorkflow(v.to_string())
    }
}

/// Exploration limits shared by every exhaustive analysis.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_states: usize,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: DEFAULT_STATE_BUDGET,
            deadline: None,
        }
    }
}

impl Limits {
    pub fn states(max_states: usize) -> Self {
        Limits {
            max_states,
            deadline: None,
        }
    }

    pub(crate) fn check(&self, explored: usize) -> Result<(), AnalysisError> {
        if explored > self.max_states {
            return Err(AnalysisError::StateBudgetExceeded(self.max_states));
        }
        // Polling the clock on every state is measurable; every 256 is enough.
        if explored.is_multiple_of(256) {
            self.check_deadline()?;
        }
        Ok(())
    }

    pub(crate) fn check_deadline(&self) -> Result<(), AnalysisError> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(AnalysisError::DeadlineExceeded),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub transition: usize,
    pub to: usize,
}

/// All markings reachable from the initial marking, with their firing edges.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<Marking>,
    index: HashMap<Marking, usize>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl StateSpace {
    /// Breadth-first exploration; successors in transition-id order.
    pub fn explore(net: &NetSystem, limits: &Limits) -> Result<Self, AnalysisError> {
        limits.check_deadline()?;
        let mut space = StateSpace {
            states: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            outgoing: Vec::new(),
            incoming: Vec::new(),
        };
        space.intern(net.initial_marking().clone());
        let mut next = 0;
        while next < space.states.len() {
            let m = space.states[next].clone();
            for t in net.enabled_transitions(&m) {
                let to = space.intern(net.fire_unchecked(&m, t));
                limits.check(space.states.len())?;
                let e = space.edges.len();
                space.edges.push(Edge {
                    from: next,
                    transition: t,
                    to,
                });
                space.outgoing[next].push(e);
                space.incoming[to].push(e);
            }
            next += 1;
        }
        Ok(space)
    }

    fn intern(&mut self, m: Marking) -> usize {
        if let Some(&s) = self.index.get(&m) {
            return s;
        }
        let s = self.states.len();
        self.index.insert(m.clone(), s);
        self.states.push(m);
        self.outgoing.push(Vec::new());
        self.incoming.push(Vec::new());
        s
    }

    pub fn states(&self) -> &[Marking] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn find(&self, m: &Marking) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn outgoing(&self, s: usize) -> impl Iterator<Item = &Edge> {
        self.outgoing[s].iter().map(move |&e| &self.edges[e])
    }

    pub fn incoming(&self, s: usize) -> impl Iterator<Item = &Edge> {
        self.incoming[s].iter().map(move |&e| &self.edges[e])
    }

    /// States from which `target` is reachable.
    pub fn backward_closure(&self, target: Option<usize>) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let Some(target) = target else { return seen };
        seen[target] = true;
        let mut queue = VecDeque::from([target]);
        while let Some(s) = queue.pop_front() {
            for e in self.incoming(s) {
                if !seen[e.from] {
                    seen[e.from] = true;
                    queue.push_back(e.from);
                }
            }
        }
        seen
    }
}

/// Reachability graph of a workflow system, annotated with co-reachability of `[o]`.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    space: StateSpace,
    final_state: Option<usize>,
    coreachable: Vec<bool>,
    transitions: usize,
}

pub fn build_graph(net: &NetSystem, limits: &Limits) -> Result<ReachabilityGraph, AnalysisError> {
    let wf = net.is_workflow()?;
    let space = StateSpace::explore(net, limits)?;
    let mut fin = Marking::empty(net.place_count());
    fin.set(wf.sink, 1);
    let final_state = space.find(&fin);
    let coreachable = space.backward_closure(final_state);
    Ok(ReachabilityGraph {
        space,
        final_state,
        coreachable,
        transitions: net.transition_count(),
    })
}

impl ReachabilityGraph {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn state_count(&self) -> usize {
        self.space.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.space.edges.len()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn final_state(&self) -> Option<usize> {
        self.final_state
    }

    pub fn is_coreachable(&self, s: usize) -> bool {
        self.coreachable[s]
    }

    fn check(&self, t: usize) -> Result<(), AnalysisError> {
        if t < self.transitions {
            Ok(())
        } else {
            Err(AnalysisError::UnknownTransition(t))
        }
    }

    /// Some execution contains `t`.
    pub fn can_occur_t(&self, t: usize) -> Result<bool, AnalysisError> {
        self.check(t)?;
        Ok(self
            .space
            .edges
            .iter()
            .any(|e| e.transition == t && self.coreachable[e.to]))
    }

    /// Every execution contains `t`: `[o]` is unreachable once `t`'s edges are removed.
    pub fn always_occurs_t(&self, t: usize) -> Result<bool, AnalysisError> {
        self.check(t)?;
        let Some(fin) = self.final_state else {
            return Ok(true);
        };
        let mut seen = vec![false; self.state_count()];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(s) = queue.pop_front() {
            if s == fin {
                return Ok(false);
            }
            for e in self.space.outgoing(s) {
                if e.transition != t && !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        Ok(true)
    }

    /// Which `(seen t1, seen t2)` flag combinations some execution ends with;
    /// indexed by `seen1 as usize | (seen2 as usize) << 1`.
    pub fn final_flags(&self, t1: usize, t2: usize) -> Result<[bool; 4], AnalysisError> {
        self.check(t1)?;
        self.check(t2)?;
        let mut out = [false; 4];
        let Some(fin) = self.final_state else {
            return Ok(out);
        };
        let n = self.state_count();
        let mut seen = vec![false; n * 4];
        seen[0] = true;
        let mut queue = VecDeque::from([(0usize, 0usize)]);
        while let Some((s, f)) = queue.pop_front() {
            if s == fin {
                out[f] = true;
            }
            for e in self.space.outgoing(s) {
                if !self.coreachable[e.to] {
                    continue;
                }
                let mut g = f;
                if e.transition == t1 {
                    g |= 1;
                }
                if e.transition == t2 {
                    g |= 2;
                }
                if !seen[e.to * 4 + g] {
                    seen[e.to * 4 + g] = true;
                    queue.push_back((e.to, g));
                }
            }
        }
        Ok(out)
    }

    /// Some execution contains both `t1` and `t2`.
    pub fn can_cooccur_t(&self, t1: usize, t2: usize) -> Result<bool, AnalysisError> {
        Ok(self.final_flags(t1, t2)?[3])
    }

    /// Some execution contains `t1` but not `t2`.
    pub fn can_conflict_t(&self, t1: usize, t2: usize) -> Result<bool, AnalysisError> {
        Ok(self.final_flags(t1, t2)?[1])
    }

    /// No execution fires `t2` and later `t1`.
    pub fn total_causal_t(&self, t1: usize, t2: usize) -> Result<bool, AnalysisError> {
        self.check(t1)?;
        self.check(t2)?;
        if t1 == t2 {
            return Err(AnalysisError::SameTransition);
        }
        if self.final_state.is_none() || !self.coreachable[0] {
            return Ok(true);
        }
        let n = self.state_count();
        let mut seen = vec![false; n * 2];
        seen[0] = true;
        let mut queue = VecDeque::from([(0usize, false)]);
        while let Some((s, after)) = queue.pop_front() {
            for e in self.space.outgoing(s) {
                if !self.coreachable[e.to] {
                    continue;
                }
                if after && e.transition == t1 {
                    return Ok(false);
                }
                let next = after || e.transition == t2;
                let k = e.to * 2 + usize::from(next);
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back((e.to, next));
                }
            }
        }
        Ok(true)
    }

    /// Some execution has an occurrence of `t1` that causally precedes an
    /// occurrence of `t2` (token flow from one to the other).
    ///
    /// Explores `(marking, tainted tokens)` pairs: once an occurrence of `t1`
    /// is chosen, its outputs are tainted, and any occurrence consuming a
    /// tainted token taints its outputs. Only co-reachable markings are kept.
    pub fn causal_occurrence_t(
        &self,
        net: &NetSystem,
        t1: usize,
        t2: usize,
        limits: &Limits,
    ) -> Result<bool, AnalysisError> {
        self.check(t1)?;
        self.check(t2)?;
        let n = net.place_count();
        let mut seen: HashSet<(usize, Marking)> = HashSet::new();
        let mut queue: VecDeque<(usize, Marking)> = VecDeque::new();
        // Untainted phase: every state is a possible starting point.
        for e in &self.space.edges {
            if e.transition == t1 && self.coreachable[e.to] {
                let mut taint = Marking::empty(n);
                for &p in &net.transition(t1).postset {
                    taint.add(p, 1);
                }
                if seen.insert((e.to, taint.clone())) {
                    queue.push_back((e.to, taint));
                }
            }
        }
        while let Some((s, taint)) = queue.pop_front() {
            limits.check(seen.len())?;
            let m = &self.space.states[s];
            for e in self.space.outgoing(s) {
                if !self.coreachable[e.to] {
                    continue;
                }
                let tr = net.transition(e.transition);
                // Each input place can give a tainted or an untainted token.
                let pre = &tr.preset;
                for mask in 0u32..(1 << pre.len()) {
                    let mut ok = true;
                    let mut next = taint.clone();
                    for (k, &p) in pre.iter().enumerate() {
                        let tainted = mask & (1 << k) != 0;
                        let (t, all) = (taint.get(p), m.get(p));
                        if tainted && t == 0 || !tainted && all == t {
                            ok = false;
                            break;
                        }
                        if tainted {
                            next.set(p, next.get(p) - 1);
                        }
                    }
                    if !ok {
                        continue;
                    }
                    if mask != 0 {
                        if e.transition == t2 {
                            return Ok(true);
                        }
                        for &p in &tr.postset {
                            next.add(p, 1);
                        }
                    }
                    if seen.insert((e.to, next.clone())) {
                        queue.push_back((e.to, next));
                    }
                }
            }
        }
        Ok(false)
    }

    /// Transitions that label no edge.
    pub fn dead_transitions(&self) -> Vec<usize> {
        let mut used = vec![false; self.transitions];
        for e in &self.space.edges {
            used[e.transition] = true;
        }
        (0..self.transitions).filter(|&t| !used[t]).collect()
    }
}

/// Copy of `net` extended with a marked place `p′` and a silent copy `t′` of
/// `t` that also consumes `p′`; `t` can occur iff `[o]` is reachable there.
pub fn can_occur_by_construction(
    net: &NetSystem,
    t: usize,
    limits: &Limits,
) -> Result<bool, AnalysisError> {
    if t >= net.transition_count() {
        return Err(AnalysisError::UnknownTransition(t));
    }
    let wf = net.is_workflow()?;
    let tr = net.transition(t);
    let p_fresh = net.fresh_id("p'");
    let t_fresh = net.fresh_id("t'");
    let mut b = net.to_builder();
    b.place(p_fresh.clone(), 1)
        .transition(t_fresh.clone(), "")
        .arc(p_fresh, t_fresh.clone());
    for &p in &tr.preset {
        b.arc(net.place_id(p), t_fresh.clone());
    }
    for &p in &tr.postset {
        b.arc(t_fresh.clone(), net.place_id(p));
    }
    let extended = b.build().expect("extension of a valid net");
    let space = StateSpace::explore(&extended, limits)?;
    let target = extended
        .marking(&[(net.place_id(wf.sink), 1)])
        .expect("sink exists");
    Ok(space.find(&target).is_some())
}

/// Copy of `net` where `t` additionally consumes a fresh place `p′` marked
/// initially; `t` always occurs iff `[p′,o]` is unreachable there.
pub fn always_occurs_by_construction(
    net: &NetSystem,
    t: usize,
    limits: &Limits,
) -> Result<bool, AnalysisError> {
    if t >= net.transition_count() {
        return Err(AnalysisError::UnknownTransition(t));
    }
    let wf = net.is_workflow()?;
    let p_fresh = net.fresh_id("p'");
    let mut b = net.to_builder();
    b.place(p_fresh.clone(), 1)
        .arc(p_fresh.clone(), net.transition(t).id.clone());
    let extended = b.build().expect("extension of a valid net");
    let space = StateSpace::explore(&extended, limits)?;
    let target = extended
        .marking(&[(p_fresh.as_str(), 1), (net.place_id(wf.sink), 1)])
        .expect("places exist");
    Ok(space.find(&target).is_none())
}
