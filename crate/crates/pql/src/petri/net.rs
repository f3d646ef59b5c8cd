use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use super::Marking;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("arc {0} -> {1} must connect a place and a transition")]
    InvalidArc(String, String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// Empty string means silent.
    pub label: String,
    pub preset: Vec<usize>,
    pub postset: Vec<usize>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_empty()
    }
}

/// Why a net is not a workflow system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkflowViolation {
    NoSource,
    MultipleSources(Vec<String>),
    NoSink,
    MultipleSinks(Vec<String>),
    NotOnPath(String),
    MarkingNotSource { source: String, marking: String },
}

impl fmt::Display for WorkflowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkflowViolation::NoSource => write!(f, "no source place"),
            WorkflowViolation::MultipleSources(ps) => {
                write!(f, "multiple sources: {}", ps.join(", "))
            }
            WorkflowViolation::NoSink => write!(f, "no sink place"),
            WorkflowViolation::MultipleSinks(ps) => write!(f, "multiple sinks: {}", ps.join(", ")),
            WorkflowViolation::NotOnPath(n) => {
                write!(f, "node `{n}` is not on a path from source to sink")
            }
            WorkflowViolation::MarkingNotSource { source, marking } => {
                write!(f, "marking not [{source}] (found {marking})")
            }
        }
    }
}

/// Source and sink place indices of a workflow system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workflow {
    pub source: usize,
    pub sink: usize,
}

/// A labelled place/transition net with an initial marking.
///
/// Places and transitions are indexed in lexicographic order of their ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetSystem {
    places: Vec<String>,
    transitions: Vec<Transition>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
    producers: Vec<Vec<usize>>,
    consumers: Vec<Vec<usize>>,
    initial: Marking,
}

/// Incremental constructor for [`NetSystem`].
#[derive(Debug, Clone, Default)]
pub struct NetBuilder {
    places: BTreeMap<String, u32>,
    transitions: BTreeMap<String, String>,
    arcs: BTreeSet<(String, String)>,
    duplicate: Option<String>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, id: impl Into<String>, tokens: u32) -> &mut Self {
        let id = id.into();
        if self.places.contains_key(&id) || self.transitions.contains_key(&id) {
            self.duplicate.get_or_insert(id.clone());
        }
        self.places.insert(id, tokens);
        self
    }

    pub fn transition(&mut self, id: impl Into<String>, label: impl Into<String>) -> &mut Self {
        let id = id.into();
        if self.places.contains_key(&id) || self.transitions.contains_key(&id) {
            self.duplicate.get_or_insert(id.clone());
        }
        self.transitions.insert(id, label.into());
        self
    }

    pub fn arc(&mut self, source: impl Into<String>, target: impl Into<String>) -> &mut Self {
        self.arcs.insert((source.into(), target.into()));
        self
    }

    /// Convenience: transition with its full environment.
    pub fn transition_with(
        &mut self,
        id: &str,
        label: &str,
        pre: &[&str],
        post: &[&str],
    ) -> &mut Self {
        self.transition(id, label);
        for p in pre {
            self.arc(*p, id);
        }
        for p in post {
            self.arc(id, *p);
        }
        self
    }

    pub fn has_node(&self, id: &str) -> bool {
        self.places.contains_key(id) || self.transitions.contains_key(id)
    }

    pub fn set_tokens(&mut self, id: &str, tokens: u32) -> &mut Self {
        if let Some(t) = self.places.get_mut(id) {
            *t = tokens;
        }
        self
    }

    /// Removes every token.
    pub fn clear_marking(&mut self) -> &mut Self {
        self.places.values_mut().for_each(|t| *t = 0);
        self
    }

    pub fn build(&self) -> Result<NetSystem, NetError> {
        if let Some(d) = &self.duplicate {
            return Err(NetError::DuplicateNode(d.clone()));
        }
        let places: Vec<String> = self.places.keys().cloned().collect();
        let place_index: HashMap<String, usize> = places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .map(|(id, label)| Transition {
                id: id.clone(),
                label: label.clone(),
                preset: Vec::new(),
                postset: Vec::new(),
            })
            .collect();
        let transition_index: HashMap<String, usize> = transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        let mut producers = vec![Vec::new(); places.len()];
        let mut consumers = vec![Vec::new(); places.len()];
        for (s, t) in &self.arcs {
            match (
                place_index.get(s),
                transition_index.get(s),
                place_index.get(t),
                transition_index.get(t),
            ) {
                (Some(&p), None, None, Some(&tr)) => {
                    transitions[tr].preset.push(p);
                    consumers[p].push(tr);
                }
                (None, Some(&tr), Some(&p), None) => {
                    transitions[tr].postset.push(p);
                    producers[p].push(tr);
                }
                (None, None, _, _) => return Err(NetError::UnknownNode(s.clone())),
                (_, _, None, None) => return Err(NetError::UnknownNode(t.clone())),
                _ => return Err(NetError::InvalidArc(s.clone(), t.clone())),
            }
        }
        for t in &mut transitions {
            t.preset.sort_unstable();
            t.postset.sort_unstable();
        }
        for v in producers.iter_mut().chain(consumers.iter_mut()) {
            v.sort_unstable();
        }
        let initial = Marking::from_counts(self.places.values().copied().collect());
        Ok(NetSystem {
            places,
            transitions,
            place_index,
            transition_index,
            producers,
            consumers,
            initial,
        })
    }
}

impl NetSystem {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_id(&self, p: usize) -> &str {
        &self.places[p]
    }

    pub fn transition(&self, t: usize) -> &Transition {
        &self.transitions[t]
    }

    pub fn find_place(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn find_transition(&self, id: &str) -> Result<usize, NetError> {
        self.transition_index
            .get(id)
            .copied()
            .ok_or_else(|| NetError::UnknownTransition(id.to_string()))
    }

    /// Transitions with an arc into `p`.
    pub fn producers(&self, p: usize) -> &[usize] {
        &self.producers[p]
    }

    /// Transitions with an arc from `p`.
    pub fn consumers(&self, p: usize) -> &[usize] {
        &self.consumers[p]
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn arc_count(&self) -> usize {
        self.transitions
            .iter()
            .map(|t| t.preset.len() + t.postset.len())
            .sum()
    }

    /// Marking from `(place-id, tokens)` pairs.
    pub fn marking(&self, tokens: &[(&str, u32)]) -> Result<Marking, NetError> {
        let mut m = Marking::empty(self.places.len());
        for (id, k) in tokens {
            let p = self
                .find_place(id)
                .ok_or_else(|| NetError::UnknownNode(id.to_string()))?;
            m.add(p, *k);
        }
        Ok(m)
    }

    pub fn enabled(&self, m: &Marking, t: usize) -> bool {
        self.transitions[t].preset.iter().all(|&p| m.get(p) > 0)
    }

    pub fn enabled_by_id(&self, m: &Marking, id: &str) -> Result<bool, NetError> {
        Ok(self.enabled(m, self.find_transition(id)?))
    }

    /// `(m \ •t) ⊎ t•`; the caller guarantees enabledness.
    pub fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.clone();
        let tr = &self.transitions[t];
        for &p in &tr.preset {
            next.set(p, next.get(p) - 1);
        }
        for &p in &tr.postset {
            next.add(p, 1);
        }
        next
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        if !self.enabled(m, t) {
            return Err(NetError::NotEnabled(self.transitions[t].id.clone()));
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub fn fire_by_id(&self, m: &Marking, id: &str) -> Result<Marking, NetError> {
        self.fire(m, self.find_transition(id)?)
    }

    /// Enabled transitions in index (lexicographic id) order.
    pub fn enabled_transitions<'a>(&'a self, m: &'a Marking) -> impl Iterator<Item = usize> + 'a {
        (0..self.transitions.len()).filter(move |&t| self.enabled(m, t))
    }

    /// Replays `steps` from the initial marking.
    pub fn replay(&self, steps: &[usize]) -> Result<Marking, NetError> {
        steps
            .iter()
            .try_fold(self.initial.clone(), |m, &t| self.fire(&m, t))
    }

    pub fn is_workflow(&self) -> Result<Workflow, WorkflowViolation> {
        let sources: Vec<usize> = (0..self.places.len())
            .filter(|&p| self.producers[p].is_empty())
            .collect();
        let sinks: Vec<usize> = (0..self.places.len())
            .filter(|&p| self.consumers[p].is_empty())
            .collect();
        let ids = |v: &[usize]| {
            v.iter()
                .map(|&p| self.places[p].clone())
                .collect::<Vec<_>>()
        };
        let source = match sources.as_slice() {
            [] => return Err(WorkflowViolation::NoSource),
            [s] => *s,
            _ => return Err(WorkflowViolation::MultipleSources(ids(&sources))),
        };
        let sink = match sinks.as_slice() {
            [] => return Err(WorkflowViolation::NoSink),
            [s] => *s,
            _ => return Err(WorkflowViolation::MultipleSinks(ids(&sinks))),
        };
        // Nodes: places 0..P, transitions P..P+T.
        let np = self.places.len();
        let forward = self.node_reach(np, source, true);
        let backward = self.node_reach(np, sink, false);
        for p in 0..np {
            if !forward[p] || !backward[p] {
                return Err(WorkflowViolation::NotOnPath(self.places[p].clone()));
            }
        }
        for t in 0..self.transitions.len() {
            if !forward[np + t] || !backward[np + t] {
                return Err(WorkflowViolation::NotOnPath(self.transitions[t].id.clone()));
            }
        }
        let mut expected = Marking::empty(np);
        expected.set(source, 1);
        if self.initial != expected {
            return Err(WorkflowViolation::MarkingNotSource {
                source: self.places[source].clone(),
                marking: self.format_marking(&self.initial),
            });
        }
        Ok(Workflow { source, sink })
    }

    fn node_reach(&self, np: usize, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; np + self.transitions.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            let next: Vec<usize> = if n < np {
                let ts = if forward {
                    &self.consumers[n]
                } else {
                    &self.producers[n]
                };
                ts.iter().map(|&t| np + t).collect()
            } else {
                let t = &self.transitions[n - np];
                if forward {
                    t.postset.clone()
                } else {
                    t.preset.clone()
                }
            };
            for m in next {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Labels of `steps` with silent entries dropped.
    pub fn label_execution(&self, steps: &[usize]) -> Vec<String> {
        steps
            .iter()
            .map(|&t| &self.transitions[t].label)
            .filter(|l| !l.is_empty())
            .cloned()
            .collect()
    }

    /// Distinct non-empty labels.
    pub fn observable_labels(&self) -> BTreeSet<String> {
        self.transitions
            .iter()
            .filter(|t| !t.is_silent())
            .map(|t| t.label.clone())
            .collect()
    }

    /// `[p1,p2,p2]` using place ids.
    pub fn format_marking(&self, m: &Marking) -> String {
        let mut parts = Vec::new();
        for p in m.support() {
            for _ in 0..m.get(p) {
                parts.push(self.places[p].as_str());
            }
        }
        format!("[{}]", parts.join(","))
    }

    /// Whether the place/transition graph contains a directed cycle.
    pub fn is_cyclic(&self) -> bool {
        // Kahn's algorithm over transitions linked through places.
        let nt = self.transitions.len();
        let mut indegree = vec![0usize; nt];
        for t in &self.transitions {
            for &p in &t.postset {
                for &u in &self.consumers[p] {
                    indegree[u] += 1;
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..nt).filter(|&t| indegree[t] == 0).collect();
        let mut done = 0;
        while let Some(t) = queue.pop_front() {
            done += 1;
            for &p in &self.transitions[t].postset {
                for &u in &self.consumers[p] {
                    indegree[u] -= 1;
                    if indegree[u] == 0 {
                        queue.push_back(u);
                    }
                }
            }
        }
        done < nt
    }

    /// Builder holding a copy of this net, for derived constructions.
    pub fn to_builder(&self) -> NetBuilder {
        let mut b = NetBuilder::new();
        for (p, id) in self.places.iter().enumerate() {
            b.place(id.clone(), self.initial.get(p));
        }
        for t in &self.transitions {
            b.transition(t.id.clone(), t.label.clone());
            for &p in &t.preset {
                b.arc(self.places[p].clone(), t.id.clone());
            }
            for &p in &t.postset {
                b.arc(t.id.clone(), self.places[p].clone());
            }
        }
        b
    }

    /// Same structure with a different initial marking.
    pub fn with_initial_marking(&self, m: Marking) -> NetSystem {
        let mut copy = self.clone();
        copy.initial = Marking::from_counts((0..self.places.len()).map(|p| m.get(p)).collect());
        copy
    }

    /// An id not used by any node, derived from `base`.
    pub fn fresh_id(&self, base: &str) -> String {
        let taken =
            |s: &str| self.place_index.contains_key(s) || self.transition_index.contains_key(s);
        if !taken(base) {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}#{i}"))
            .find(|s| !taken(s))
            .unwrap()
    }
}
