//! Boundedness and soundness of workflow systems.

use std::collections::{BTreeSet, HashSet};

use crate::petri::{Marking, NetSystem};
use crate::statespace::{build_graph, AnalysisError, Limits};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Boundedness {
    Bounded {
        states: usize,
    },
    /// Firing sequence (transition ids) ending in a marking that strictly
    /// covers one of its ancestors.
    Unbounded {
        witness: Vec<String>,
    },
}

impl Boundedness {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Boundedness::Bounded { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub bounded: bool,
    pub unbounded_witness: Vec<String>,
    pub option_to_complete: bool,
    pub proper_completion: bool,
    pub dead_transitions: BTreeSet<String>,
    pub sound: bool,
    pub states: usize,
}

/// Depth-first search that stops at the first marking strictly covering an
/// ancestor on the current path.
pub fn check_bounded(net: &NetSystem, limits: &Limits) -> Result<Boundedness, AnalysisError> {
    struct Frame {
        marking: Marking,
        next: usize,
        via: Option<usize>,
    }
    let mut visited: HashSet<Marking> = HashSet::new();
    visited.insert(net.initial_marking().clone());
    let mut stack = vec![Frame {
        marking: net.initial_marking().clone(),
        next: 0,
        via: None,
    }];
    while let Some(top) = stack.last_mut() {
        let Some(t) = (top.next..net.transition_count()).find(|&t| net.enabled(&top.marking, t))
        else {
            stack.pop();
            continue;
        };
        top.next = t + 1;
        let m = net.fire_unchecked(&top.marking, t);
        if stack.iter().any(|f| m.strictly_covers(&f.marking)) {
            let mut witness: Vec<String> = stack
                .iter()
                .filter_map(|f| f.via)
                .map(|t| net.transition(t).id.clone())
                .collect();
            witness.push(net.transition(t).id.clone());
            return Ok(Boundedness::Unbounded { witness });
        }
        if visited.insert(m.clone()) {
            limits.check(visited.len())?;
            stack.push(Frame {
                marking: m,
                next: 0,
                via: Some(t),
            });
        }
    }
    Ok(Boundedness::Bounded {
        states: visited.len(),
    })
}

pub fn check_soundness(net: &NetSystem, limits: &Limits) -> Result<SoundnessReport, AnalysisError> {
    let wf = net.is_workflow()?;
    if let Boundedness::Unbounded { witness } = check_bounded(net, limits)? {
        return Err(AnalysisError::Unbounded { witness });
    }
    let graph = build_graph(net, limits)?;
    let option_to_complete = (0..graph.state_count()).all(|s| graph.is_coreachable(s));
    let mut fin = Marking::empty(net.place_count());
    fin.set(wf.sink, 1);
    let proper_completion = !graph
        .space()
        .states()
        .iter()
        .any(|m| m.strictly_covers(&fin));
    let dead_transitions: BTreeSet<String> = graph
        .dead_transitions()
        .into_iter()
        .map(|t| net.transition(t).id.clone())
        .collect();
    let sound = option_to_complete && proper_completion && dead_transitions.is_empty();
    Ok(SoundnessReport {
        bounded: true,
        unbounded_witness: Vec::new(),
        option_to_complete,
        proper_completion,
        dead_transitions,
        sound,
        states: graph.state_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::petri::NetBuilder;

    #[test]
    fn f5_is_sound() {
        let net = fixtures::f5();
        assert_eq!(
            check_bounded(&net, &Limits::default()).unwrap(),
            Boundedness::Bounded { states: 7 }
        );
        let r = check_soundness(&net, &Limits::default()).unwrap();
        assert!(r.sound && r.bounded && r.option_to_complete && r.proper_completion);
        assert!(fixtures::f_loop().is_workflow().is_ok());
        assert!(
            check_soundness(&fixtures::f_loop(), &Limits::default())
                .unwrap()
                .sound
        );
    }

    #[test]
    fn growing_loop_is_unbounded() {
        let mut b = NetBuilder::new();
        b.place("i", 1).place("p", 0).place("q", 0).place("o", 0);
        b.transition_with("t_in", "a", &["i"], &["p"])
            .transition_with("t", "t", &["p"], &["p", "q"])
            .transition_with("t_out", "b", &["p", "q"], &["o"]);
        let net = b.build().unwrap();
        match check_bounded(&net, &Limits::default()).unwrap() {
            Boundedness::Unbounded { witness } => assert_eq!(witness, vec!["t_in", "t"]),
            other => panic!("expected unbounded, got {other:?}"),
        }
        assert!(matches!(
            check_soundness(&net, &Limits::default()),
            Err(AnalysisError::Unbounded { .. })
        ));
    }

    #[test]
    fn lone_place_is_bounded() {
        let mut b = NetBuilder::new();
        b.place("p", 1);
        assert!(check_bounded(&b.build().unwrap(), &Limits::default())
            .unwrap()
            .is_bounded());
    }

    #[test]
    fn dead_transition_breaks_soundness() {
        let mut b = fixtures::f5_builder();
        b.transition_with("t_dead", "z", &["p4", "p3", "i"], &["o"]);
        let r = check_soundness(&b.build().unwrap(), &Limits::default()).unwrap();
        assert_eq!(r.dead_transitions, BTreeSet::from(["t_dead".to_string()]));
        assert!(!r.sound && r.option_to_complete && r.proper_completion);
    }

    #[test]
    fn leftover_token_breaks_proper_completion() {
        // The AND-split puts a token on each branch and both branches end in o.
        let mut b = NetBuilder::new();
        b.place("i", 1).place("p4", 0).place("p5", 0).place("o", 0);
        b.transition_with("t_split", "s", &["i"], &["p4", "p5"])
            .transition_with("t_x", "x", &["p4"], &["o"])
            .transition_with("t_y", "y", &["p5"], &["o"]);
        let net = b.build().unwrap();
        let r = check_soundness(&net, &Limits::default()).unwrap();
        assert!(!r.proper_completion && !r.option_to_complete && !r.sound);
    }

    #[test]
    fn non_workflow_rejected() {
        let mut b = fixtures::f5_builder();
        b.set_tokens("i", 2);
        assert!(matches!(
            check_soundness(&b.build().unwrap(), &Limits::default()),
            Err(AnalysisError::NotWorkflow(_))
        ));
    }
}
