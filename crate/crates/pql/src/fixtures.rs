//! Small reference nets used throughout the tests and examples.

use crate::petri::{NetBuilder, NetSystem};

/// Choice `a1 | a2`, then `b`, then `c ∥ d`, then `e`.
pub fn f5() -> NetSystem {
    f5_builder().build().expect("fixture is well formed")
}

pub fn f5_builder() -> NetBuilder {
    let mut b = NetBuilder::new();
    for p in ["i", "p1", "p2", "p3", "p4", "p5", "o"] {
        b.place(p, u32::from(p == "i"));
    }
    b.transition_with("t_a1", "a1", &["i"], &["p1"])
        .transition_with("t_a2", "a2", &["i"], &["p1"])
        .transition_with("t_b", "b", &["p1"], &["p2", "p3"])
        .transition_with("t_c", "c", &["p2"], &["p4"])
        .transition_with("t_d", "d", &["p3"], &["p5"])
        .transition_with("t_e", "e", &["p4", "p5"], &["o"]);
    b
}

/// `s`, then any number of `l` iterations (each closed by a silent step), then `f`.
pub fn f_loop() -> NetSystem {
    let mut b = NetBuilder::new();
    b.place("i", 1).place("p1", 0).place("q", 0).place("o", 0);
    b.transition_with("t_s", "s", &["i"], &["p1"])
        .transition_with("t_l", "l", &["p1"], &["q"])
        .transition_with("t_back", "", &["q"], &["p1"])
        .transition_with("t_f", "f", &["p1"], &["o"]);
    b.build().expect("fixture is well formed")
}

/// `i -> t -> o` with the given label.
pub fn single(label: &str) -> NetSystem {
    let mut b = NetBuilder::new();
    b.place("i", 1)
        .place("o", 0)
        .transition_with("t", label, &["i"], &["o"]);
    b.build().expect("fixture is well formed")
}

/// Straight sequence of labelled transitions.
pub fn sequence(labels: &[&str]) -> NetSystem {
    let mut b = NetBuilder::new();
    b.place("i", 1);
    let mut prev = "i".to_string();
    for (k, l) in labels.iter().enumerate() {
        let next = if k + 1 == labels.len() {
            "o".to_string()
        } else {
            format!("p{k}")
        };
        b.place(next.clone(), 0);
        let id = format!("t{k}");
        b.transition(id.clone(), *l)
            .arc(prev.clone(), id.clone())
            .arc(id, next.clone());
        prev = next;
    }
    b.build().expect("fixture is well formed")
}

/// AND-split into branches `x` and `y`, each an XOR of two alternatives, then a join.
///
/// The second alternative in each branch reaches the same marking as the first, so
/// its events become cutoffs.
pub fn parallel_choices() -> NetSystem {
    let mut b = NetBuilder::new();
    for p in ["i", "pa", "pb", "qa", "qb", "o"] {
        b.place(p, u32::from(p == "i"));
    }
    b.transition_with("t0", "split", &["i"], &["pa", "pb"])
        .transition_with("ta1", "x1", &["pa"], &["qa"])
        .transition_with("ta2", "x2", &["pa"], &["qa"])
        .transition_with("tb1", "y1", &["pb"], &["qb"])
        .transition_with("tb2", "y2", &["pb"], &["qb"])
        .transition_with("tj", "join", &["qa", "qb"], &["o"]);
    b.build().expect("fixture is well formed")
}
