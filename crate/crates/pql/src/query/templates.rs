//! Query templates grouped by subgroup code (`1.a` … `3.b.4`).
//!
//! Each template is a full query whose task labels are `{L1}`, `{L2}`, …
//! placeholders; a placeholder stands for a quoted label.

use rand::seq::SliceRandom;
use rand::Rng;

/// (code, file contents).
pub const SUBGROUPS: [(&str, &str); 15] = [
    ("1.a", include_str!("../../templates/1.a.pql")),
    ("1.b", include_str!("../../templates/1.b.pql")),
    ("2.a.1", include_str!("../../templates/2.a.1.pql")),
    ("2.a.2", include_str!("../../templates/2.a.2.pql")),
    ("2.a.3", include_str!("../../templates/2.a.3.pql")),
    ("2.b.1", include_str!("../../templates/2.b.1.pql")),
    ("2.b.2", include_str!("../../templates/2.b.2.pql")),
    ("2.b.3", include_str!("../../templates/2.b.3.pql")),
    ("3.a.1", include_str!("../../templates/3.a.1.pql")),
    ("3.a.2", include_str!("../../templates/3.a.2.pql")),
    ("3.a.3", include_str!("../../templates/3.a.3.pql")),
    ("3.b.1", include_str!("../../templates/3.b.1.pql")),
    ("3.b.2", include_str!("../../templates/3.b.2.pql")),
    ("3.b.3", include_str!("../../templates/3.b.3.pql")),
    ("3.b.4", include_str!("../../templates/3.b.4.pql")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub subgroup: &'static str,
    pub text: &'static str,
}

impl Template {
    pub fn category(&self) -> u8 {
        self.subgroup.as_bytes()[0] - b'0'
    }

    /// Highest placeholder number used.
    pub fn arity(&self) -> usize {
        (1..)
            .take_while(|i| self.text.contains(&format!("{{L{i}}}")))
            .last()
            .unwrap_or(0)
    }

    /// Replaces `{Li}` with `labels[i - 1]`, quoted.
    pub fn instantiate(&self, labels: &[String]) -> String {
        let mut out = self.text.to_string();
        for i in (1..=self.arity()).rev() {
            let quoted =
                serde_json::to_string(&labels[(i - 1) % labels.len()]).expect("strings serialise");
            out = out.replace(&format!("{{L{i}}}"), &quoted);
        }
        out
    }

    /// Instantiation with labels drawn from `pool`, distinct while the pool allows.
    pub fn instantiate_random<R: Rng>(&self, rng: &mut R, pool: &[String]) -> String {
        let mut labels: Vec<String> = pool
            .choose_multiple(rng, self.arity().min(pool.len()))
            .cloned()
            .collect();
        while labels.len() < self.arity() {
            labels.push(pool.choose(rng).expect("non-empty label pool").clone());
        }
        self.instantiate(&labels)
    }
}

/// Every template, in subgroup order.
pub fn all() -> Vec<Template> {
    SUBGROUPS
        .iter()
        .flat_map(|(code, text)| {
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("--"))
                .map(move |l| Template {
                    subgroup: code,
                    text: l,
                })
        })
        .collect()
}

/// Templates of one category (1, 2 or 3).
pub fn category(n: u8) -> Vec<Template> {
    all().into_iter().filter(|t| t.category() == n).collect()
}
