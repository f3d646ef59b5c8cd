//! Random block-structured workflow nets.
//!
//! Blocks are tasks, sequences, exclusive choices, parallel branches and
//! loops, each compiled between an entry and an exit place. Such nets are
//! sound by construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::petri::{NetBuilder, NetSystem};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_transitions: usize,
    pub max_places: usize,
    /// Upper bound on labelled tasks in the block tree.
    pub max_tasks: usize,
    pub allow_loops: bool,
    /// Forces at least one loop when `allow_loops` is set.
    pub require_loop: bool,
    /// Label pool; labels may repeat within a net.
    pub labels: Vec<String>,
    /// Chance that a task is silent.
    pub silent_ratio: f64,
}

impl GenConfig {
    /// At most 8 transitions and 10 places, no loops.
    pub fn small_acyclic() -> Self {
        GenConfig {
            max_transitions: 8,
            max_places: 10,
            max_tasks: 6,
            allow_loops: false,
            require_loop: false,
            labels: ["a", "b", "c", "d", "e", "f"]
                .into_iter()
                .map(String::from)
                .collect(),
            silent_ratio: 0.1,
        }
    }

    pub fn small_cyclic() -> Self {
        GenConfig {
            allow_loops: true,
            require_loop: true,
            max_transitions: 10,
            max_places: 10,
            ..Self::small_acyclic()
        }
    }

    /// Up to `tasks` observable transitions drawn from `labels`.
    pub fn sized(tasks: usize, labels: Vec<String>) -> Self {
        GenConfig {
            max_transitions: tasks * 3,
            max_places: tasks * 3,
            max_tasks: tasks,
            allow_loops: true,
            require_loop: false,
            labels,
            silent_ratio: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Block {
    Task(Option<String>),
    Seq(Vec<Block>),
    Xor(Vec<Block>),
    And(Vec<Block>),
    Loop(Box<Block>, Box<Block>),
}

impl Block {
    fn has_loop(&self) -> bool {
        match self {
            Block::Task(_) => false,
            Block::Loop(..) => true,
            Block::Seq(v) | Block::Xor(v) | Block::And(v) => v.iter().any(Block::has_loop),
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
}

impl<R: Rng> Gen<'_, R> {
    fn task(&mut self) -> Block {
        if self.rng.gen_bool(self.cfg.silent_ratio) {
            Block::Task(None)
        } else {
            Block::Task(self.cfg.labels.choose(self.rng).cloned())
        }
    }

    /// Block with exactly `n` tasks (n ≥ 1).
    fn block(&mut self, n: usize, depth: usize) -> Block {
        if n == 1 || depth == 0 {
            return if n == 1 {
                self.task()
            } else {
                Block::Seq((0..n).map(|_| self.task()).collect())
            };
        }
        let kinds = if self.cfg.allow_loops { 4 } else { 3 };
        match self.rng.gen_range(0..kinds) {
            3 => {
                let body = self.rng.gen_range(1..n);
                let redo = if self.rng.gen_bool(0.5) {
                    Block::Task(None)
                } else {
                    self.block(n - body, depth - 1)
                };
                let body = self.block(body, depth - 1);
                Block::Loop(Box::new(body), Box::new(redo))
            }
            k => {
                let parts = self.split(n);
                let blocks = parts
                    .into_iter()
                    .map(|m| self.block(m, depth - 1))
                    .collect();
                match k {
                    0 => Block::Seq(blocks),
                    1 => Block::Xor(blocks),
                    _ => Block::And(blocks),
                }
            }
        }
    }

    fn split(&mut self, n: usize) -> Vec<usize> {
        let parts = self.rng.gen_range(2..=n.min(3));
        let mut out = vec![1; parts];
        for _ in parts..n {
            let k = self.rng.gen_range(0..parts);
            out[k] += 1;
        }
        out
    }
}

struct Compiler {
    b: NetBuilder,
    places: usize,
    transitions: usize,
}

impl Compiler {
    fn place(&mut self) -> String {
        let id = format!("p{}", self.places);
        self.places += 1;
        self.b.place(id.clone(), 0);
        id
    }

    fn transition(&mut self, label: &str, pre: &[&str], post: &[&str]) {
        let id = format!("t{}", self.transitions);
        self.transitions += 1;
        self.b.transition_with(&id, label, pre, post);
    }

    fn compile(&mut self, block: &Block, entry: &str, exit: &str) {
        match block {
            Block::Task(l) => self.transition(l.as_deref().unwrap_or(""), &[entry], &[exit]),
            Block::Seq(v) => {
                let mut from = entry.to_string();
                for (k, b) in v.iter().enumerate() {
                    let to = if k + 1 == v.len() {
                        exit.to_string()
                    } else {
                        self.place()
                    };
                    self.compile(b, &from, &to);
                    from = to;
                }
            }
            Block::Xor(v) => {
                for b in v {
                    self.compile(b, entry, exit);
                }
            }
            Block::And(v) => {
                let starts: Vec<String> = v.iter().map(|_| self.place()).collect();
                let ends: Vec<String> = v.iter().map(|_| self.place()).collect();
                let s: Vec<&str> = starts.iter().map(String::as_str).collect();
                let e: Vec<&str> = ends.iter().map(String::as_str).collect();
                self.transition("", &[entry], &s);
                for (k, b) in v.iter().enumerate() {
                    self.compile(b, &starts[k], &ends[k]);
                }
                self.transition("", &e, &[exit]);
            }
            Block::Loop(body, redo) => {
                let mid = self.place();
                self.compile(body, entry, &mid);
                self.compile(redo, &mid, entry);
                self.transition("", &[&mid], &[exit]);
            }
        }
    }
}

fn compile(block: &Block) -> NetSystem {
    let mut c = Compiler {
        b: NetBuilder::new(),
        places: 0,
        transitions: 0,
    };
    c.b.place("i", 1).place("o", 0);
    c.compile(block, "i", "o");
    c.b.build().expect("generated ids are unique")
}

/// A loop whose entry is the source place would give `i` an incoming arc.
fn starts_with_loop(block: &Block) -> bool {
    match block {
        Block::Loop(..) => true,
        Block::Seq(v) => v.first().is_some_and(starts_with_loop),
        Block::Xor(v) => v.iter().any(starts_with_loop),
        _ => false,
    }
}

/// A random sound workflow net within the configured limits.
pub fn random_net<R: Rng>(rng: &mut R, cfg: &GenConfig) -> NetSystem {
    loop {
        let tasks = rng.gen_range(1..=cfg.max_tasks.max(1));
        let block = Gen { rng, cfg }.block(tasks, 4);
        if cfg.allow_loops && cfg.require_loop && !block.has_loop() {
            continue;
        }
        let block = if starts_with_loop(&block) {
            Block::Seq(vec![Block::Task(None), block])
        } else {
            block
        };
        let net = compile(&block);
        if net.transition_count() <= cfg.max_transitions && net.place_count() <= cfg.max_places {
            return net;
        }
    }
}

const VERBS: [&str; 16] = [
    "approve", "archive", "assess", "check", "file", "notify", "pay", "plan", "receive", "record",
    "register", "review", "send", "ship", "sign", "validate",
];
const OBJECTS: [&str; 10] = [
    "application",
    "claim",
    "contract",
    "delivery",
    "form",
    "invoice",
    "order",
    "payment",
    "report",
    "request",
];

/// `n` distinct verb-object labels such as `approve invoice`.
///
/// Labels sharing a word pass moderate similarity thresholds (`ship order`
/// and `sign order`) while most pairs stay apart. Numbered labels
/// like `task 1` and `task 12` would all be similar to each other.
pub fn label_pool(n: usize) -> Vec<String> {
    let mut combos: Vec<String> = OBJECTS
        .iter()
        .flat_map(|o| VERBS.iter().map(move |v| format!("{v} {o}")))
        .collect();
    combos.shuffle(&mut ChaCha8Rng::seed_from_u64(0x1abe1));
    (0..n)
        .map(|k| match k / combos.len() {
            0 => combos[k].clone(),
            round => format!("{} {round}", combos[k % combos.len()]),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soundness::check_soundness;
    use crate::statespace::Limits;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_nets_are_sound_and_within_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for cfg in [
            GenConfig::small_acyclic(),
            GenConfig::small_cyclic(),
            GenConfig::sized(12, label_pool(30)),
        ] {
            for _ in 0..60 {
                let net = random_net(&mut rng, &cfg);
                assert!(net.transition_count() <= cfg.max_transitions);
                assert!(net.place_count() <= cfg.max_places);
                let report = check_soundness(&net, &Limits::default()).unwrap();
                assert!(report.sound, "{}", crate::petri::pnml::write_pnml(&net));
                if cfg.require_loop {
                    assert!(net.is_cyclic());
                }
                if !cfg.allow_loops {
                    assert!(!net.is_cyclic());
                }
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let cfg = GenConfig::small_cyclic();
        let a = random_net(&mut ChaCha8Rng::seed_from_u64(3), &cfg);
        let b = random_net(&mut ChaCha8Rng::seed_from_u64(3), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn label_pool_is_distinct_and_mostly_dissimilar() {
        let pool = label_pool(200);
        let unique: std::collections::BTreeSet<&String> = pool.iter().collect();
        assert_eq!(unique.len(), 200);
        assert_eq!(pool[..30], label_pool(30)[..]);
        let vocab: crate::labels::Vocabulary = pool[..30].iter().cloned().collect();
        let sizes: Vec<usize> = pool[..30]
            .iter()
            .map(|l| crate::labels::similar(l, 0.75, &vocab).unwrap().len())
            .collect();
        assert!(sizes.iter().all(|&n| n <= 4), "{sizes:?}");
        assert!(sizes.iter().any(|&n| n > 1), "{sizes:?}");
    }
}
