//! Complete prefixes of net unfoldings and the prefix-based total-concurrency check.
//!
//! Events are added in the total adequate order of Esparza, Römer and Vogler:
//! `|⌈e⌉|`, then the sorted transition multiset of `⌈e⌉`, then the Foata
//! normal form of `⌈e⌉` level by level. An event is a cutoff when an earlier
//! event (or the empty configuration) reaches the same marking with a
//! strictly smaller key. Since the order is total, at most one non-cutoff
//! event exists per reachable marking.

use std::cell::OnceCell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;

use crate::petri::{Marking, NetSystem};
use crate::statespace::{AnalysisError, Limits};

#[derive(Debug, Clone)]
pub struct Condition {
    pub place: usize,
    /// Producing event; `None` for initial conditions.
    pub pre: Option<usize>,
    pub post: Vec<usize>,
}

/// The configuration a cutoff corresponds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corr {
    /// The empty configuration (the initial cut).
    Initial,
    Event(usize),
}

#[derive(Debug, Clone)]
pub struct Event {
    pub transition: usize,
    pub preset: Vec<usize>,
    pub postset: Vec<usize>,
    /// Marking of `Cut(⌈e⌉)`.
    pub marking: Marking,
    pub cutoff: Option<Corr>,
    local: EventSet,
    /// Foata level of the event within `⌈e⌉`, starting at 0.
    depth: usize,
}

impl Event {
    pub fn is_cutoff(&self) -> bool {
        self.cutoff.is_some()
    }
}

/// Sorted event indices. Local configurations stay small while prefixes of
/// concurrent systems can grow to many thousand events, so dense bitsets
/// per event cost quadratic memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct EventSet(Vec<usize>);

impl EventSet {
    fn contains(&self, e: usize) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn insert(&mut self, e: usize) {
        if let Err(i) = self.0.binary_search(&e) {
            self.0.insert(i, e);
        }
    }

    fn union_with(&mut self, other: &EventSet) {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) if x < y => a.next(),
                (Some(&&x), Some(&&y)) if x > y => b.next(),
                (Some(_), Some(_)) => {
                    b.next();
                    a.next()
                }
                (Some(_), None) => a.next(),
                (None, Some(_)) => b.next(),
                (None, None) => break,
            };
            out.extend(next.copied());
        }
        self.0 = out;
    }
}

#[derive(Debug, Clone)]
pub struct Prefix {
    conditions: Vec<Condition>,
    events: Vec<Event>,
    initial: Vec<usize>,
    initial_marking: Marking,
    transition_ids: Vec<String>,
    place_ids: Vec<String>,
    cutoffs: Vec<usize>,
    /// Per cutoff: `Cut(⌈c⌉)`, `⌈corr(c)⌉` and `Cut(⌈corr(c)⌉)`.
    cutoff_cuts: OnceCell<Vec<CutoffCuts>>,
}

#[derive(Debug, Clone)]
struct CutoffCuts {
    cut: Vec<usize>,
    corr_config: EventSet,
    /// Conditions consumed by events of `⌈corr(c)⌉`.
    corr_consumed: FixedBitSet,
    corr_cut: Vec<usize>,
}

/// A Foata level as a multiset, transitions sorted in descending order so that
/// lexicographic comparison puts the multiset with fewer occurrences of the
/// first differing transition first.
type Level = Vec<Reverse<usize>>;

type Key = (usize, Vec<usize>, Vec<Level>);

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    key: Key,
    seq: usize,
    transition: usize,
    preset: Vec<usize>,
}

pub fn build_prefix(net: &NetSystem, limits: &Limits) -> Result<Prefix, AnalysisError> {
    Builder::new(net, limits).run()
}

struct Builder<'a> {
    net: &'a NetSystem,
    limits: &'a Limits,
    prefix: Prefix,
    co: Vec<FixedBitSet>,
    by_place: Vec<Vec<usize>>,
    queue: BinaryHeap<Reverse<Candidate>>,
    generated: HashSet<(usize, Vec<usize>)>,
    best: HashMap<Marking, (Key, Corr)>,
    seq: usize,
}

impl<'a> Builder<'a> {
    fn new(net: &'a NetSystem, limits: &'a Limits) -> Self {
        let prefix = Prefix {
            conditions: Vec::new(),
            events: Vec::new(),
            initial: Vec::new(),
            initial_marking: net.initial_marking().clone(),
            transition_ids: net.transitions().iter().map(|t| t.id.clone()).collect(),
            place_ids: net.places().to_vec(),
            cutoffs: Vec::new(),
            cutoff_cuts: OnceCell::new(),
        };
        Builder {
            net,
            limits,
            prefix,
            co: Vec::new(),
            by_place: vec![Vec::new(); net.place_count()],
            queue: BinaryHeap::new(),
            generated: HashSet::new(),
            best: HashMap::new(),
            seq: 0,
        }
    }

    fn add_condition(&mut self, place: usize, pre: Option<usize>) -> usize {
        let b = self.prefix.conditions.len();
        self.prefix.conditions.push(Condition {
            place,
            pre,
            post: Vec::new(),
        });
        self.co.push(FixedBitSet::new());
        self.by_place[place].push(b);
        b
    }

    fn set_co(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            if self.co[x].len() <= y {
                self.co[x].grow(y + 1);
            }
            self.co[x].insert(y);
        }
    }

    fn run(mut self) -> Result<Prefix, AnalysisError> {
        let m0 = self.net.initial_marking().clone();
        for p in 0..self.net.place_count() {
            for _ in 0..m0.get(p) {
                let b = self.add_condition(p, None);
                self.prefix.initial.push(b);
            }
        }
        let init = self.prefix.initial.clone();
        for (k, &a) in init.iter().enumerate() {
            for &b in &init[k + 1..] {
                self.set_co(a, b);
            }
        }
        self.best.insert(
            m0.normalized(),
            ((0, Vec::new(), Vec::new()), Corr::Initial),
        );
        self.extend(&init);

        while let Some(Reverse(cand)) = self.queue.pop() {
            self.limits.check(self.prefix.events.len() + 1)?;
            self.add_event(cand);
        }
        let cutoffs = (0..self.prefix.events.len())
            .filter(|&e| self.prefix.events[e].is_cutoff())
            .collect();
        self.prefix.cutoffs = cutoffs;
        Ok(self.prefix)
    }

    fn add_event(&mut self, cand: Candidate) {
        let e = self.prefix.events.len();
        let mut local = EventSet::default();
        let mut depth = 0;
        for &b in &cand.preset {
            if let Some(p) = self.prefix.conditions[b].pre {
                local.union_with(&self.prefix.events[p].local);
                depth = depth.max(self.prefix.events[p].depth + 1);
            }
        }
        local.insert(e);

        // Sorted transition order need not be firable; produce everything first.
        let mut marking = self.net.initial_marking().clone();
        for &t in &cand.key.1 {
            for &p in &self.net.transition(t).postset {
                marking.add(p, 1);
            }
        }
        for &t in &cand.key.1 {
            for &p in &self.net.transition(t).preset {
                marking.set(p, marking.get(p) - 1);
            }
        }
        let norm = marking.normalized();
        let cutoff = match self.best.get(&norm) {
            Some((key, corr)) if *key < cand.key => Some(*corr),
            Some(_) => None,
            None => {
                self.best.insert(norm, (cand.key.clone(), Corr::Event(e)));
                None
            }
        };

        // Conditions concurrent with every input condition are concurrent with e.
        let mut co_e: Option<FixedBitSet> = None;
        for &b in &cand.preset {
            let set = self.co[b].clone();
            co_e = Some(match co_e {
                None => set,
                Some(mut acc) => {
                    acc.intersect_with(&set);
                    acc
                }
            });
        }
        let co_e = co_e.unwrap_or_default();

        let tr = self.net.transition(cand.transition);
        for &b in &cand.preset {
            self.prefix.conditions[b].post.push(e);
        }
        self.prefix.events.push(Event {
            transition: cand.transition,
            preset: cand.preset,
            postset: Vec::new(),
            marking,
            cutoff,
            local,
            depth,
        });
        let mut post = Vec::with_capacity(tr.postset.len());
        for &p in &tr.postset {
            post.push(self.add_condition(p, Some(e)));
        }
        self.prefix.events[e].postset = post.clone();
        // Conditions after a cutoff are never extended, so they need no co entries.
        if cutoff.is_some() {
            return;
        }
        for (k, &a) in post.iter().enumerate() {
            for &b in &post[k + 1..] {
                self.set_co(a, b);
            }
            for c in co_e.ones() {
                self.set_co(a, c);
            }
        }
        self.extend(&post);
    }

    fn usable(&self, b: usize) -> bool {
        match self.prefix.conditions[b].pre {
            None => true,
            Some(e) => !self.prefix.events[e].is_cutoff(),
        }
    }

    /// Queues every new possible extension that uses at least one of `fresh`.
    fn extend(&mut self, fresh: &[usize]) {
        for &b in fresh {
            let place = self.prefix.conditions[b].place;
            for &t in self.net.consumers(place) {
                let others: Vec<usize> = self
                    .net
                    .transition(t)
                    .preset
                    .iter()
                    .copied()
                    .filter(|&p| p != place)
                    .collect();
                let mut chosen = vec![b];
                self.co_sets(t, &others, &mut chosen);
            }
        }
    }

    fn co_sets(&mut self, t: usize, places: &[usize], chosen: &mut Vec<usize>) {
        let Some((&p, rest)) = places.split_first() else {
            let mut preset = chosen.clone();
            preset.sort_unstable();
            if self.generated.insert((t, preset.clone())) {
                let key = self.key_of(t, &preset);
                self.seq += 1;
                self.queue.push(Reverse(Candidate {
                    key,
                    seq: self.seq,
                    transition: t,
                    preset,
                }));
            }
            return;
        };
        let options: Vec<usize> = self.by_place[p]
            .iter()
            .copied()
            .filter(|&c| self.usable(c) && chosen.iter().all(|&x| self.co[x].contains(c)))
            .collect();
        for c in options {
            chosen.push(c);
            self.co_sets(t, rest, chosen);
            chosen.pop();
        }
    }

    fn key_of(&self, t: usize, preset: &[usize]) -> Key {
        let mut local = EventSet::default();
        for &b in preset {
            if let Some(p) = self.prefix.conditions[b].pre {
                local.union_with(&self.prefix.events[p].local);
            }
        }
        let mut depth = 0;
        for &b in preset {
            if let Some(p) = self.prefix.conditions[b].pre {
                depth = depth.max(self.prefix.events[p].depth + 1);
            }
        }
        let mut foata: Vec<Level> = vec![Vec::new(); depth + 1];
        let mut parikh = Vec::with_capacity(local.len() + 1);
        for x in local.ones() {
            let ev = &self.prefix.events[x];
            parikh.push(ev.transition);
            foata[ev.depth].push(Reverse(ev.transition));
        }
        parikh.push(t);
        foata[depth].push(Reverse(t));
        parikh.sort_unstable();
        for level in &mut foata {
            level.sort_unstable();
        }
        (parikh.len(), parikh, foata)
    }
}

impl Prefix {
    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn initial_conditions(&self) -> &[usize] {
        &self.initial
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn corr(&self, e: usize) -> Option<Corr> {
        self.events.get(e).and_then(|ev| ev.cutoff)
    }

    fn check(&self, e: usize) -> Result<(), AnalysisError> {
        if e < self.events.len() {
            Ok(())
        } else {
            Err(AnalysisError::UnknownTransition(e))
        }
    }

    /// `⌈e⌉` in increasing event order.
    pub fn local_config(&self, e: usize) -> Result<Vec<usize>, AnalysisError> {
        self.check(e)?;
        Ok(self.events[e].local.ones().collect())
    }

    fn corr_config(&self, corr: Corr) -> EventSet {
        match corr {
            Corr::Initial => EventSet::default(),
            Corr::Event(e) => self.events[e].local.clone(),
        }
    }

    /// Conditions produced (or initial) and not consumed within `config`.
    pub fn cut(&self, config: &[usize]) -> Vec<usize> {
        let mut produced: Vec<usize> = self.initial.clone();
        let mut consumed = HashSet::new();
        for &e in config {
            produced.extend_from_slice(&self.events[e].postset);
            consumed.extend(self.events[e].preset.iter().copied());
        }
        produced.retain(|b| !consumed.contains(b));
        produced.sort_unstable();
        produced
    }

    fn cut_of(&self, config: &EventSet) -> Vec<usize> {
        self.cut(&config.ones().collect::<Vec<_>>())
    }

    pub fn cut_marking(&self, cut: &[usize]) -> Marking {
        let mut m = Marking::empty(self.place_ids.len());
        for &b in cut {
            m.add(self.conditions[b].place, 1);
        }
        m
    }

    /// Marking of `Cut(⌈corr(e)⌉)` for a cutoff `e`.
    pub fn corr_marking(&self, e: usize) -> Option<Marking> {
        match self.corr(e)? {
            Corr::Initial => Some(self.initial_marking.clone()),
            Corr::Event(c) => Some(self.events[c].marking.clone()),
        }
    }

    /// `(e1, e2) ∈ G⁺`.
    pub fn precedes(&self, e1: usize, e2: usize) -> bool {
        e1 != e2 && self.events[e2].local.contains(e1)
    }

    fn event_before_condition(&self, e: usize, b: usize) -> bool {
        self.conditions[b]
            .pre
            .is_some_and(|p| self.events[p].local.contains(e))
    }

    fn condition_before_event(&self, b: usize, e: usize) -> bool {
        self.conditions[b]
            .post
            .iter()
            .any(|&x| self.events[e].local.contains(x))
    }

    /// `(b1, b2) ∈ G*`.
    fn condition_reaches(&self, b1: usize, b2: usize) -> bool {
        b1 == b2
            || self.conditions[b2].pre.is_some_and(|p| {
                self.conditions[b1]
                    .post
                    .iter()
                    .any(|&x| self.events[p].local.contains(x))
            })
    }

    fn consumed_by(&self, config: &EventSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.conditions.len());
        for e in config.ones() {
            for &c in &self.events[e].preset {
                out.insert(c);
            }
        }
        out
    }

    /// `a ∪ ctx` is conflict-free: no event of `a` outside `ctx` consumes a
    /// condition that `ctx` consumes too.
    fn compatible(&self, a: &EventSet, ctx: &EventSet, ctx_consumed: &FixedBitSet) -> bool {
        a.ones().filter(|&e| !ctx.contains(e)).all(|e| {
            self.events[e]
                .preset
                .iter()
                .all(|&c| !ctx_consumed.contains(c))
        })
    }

    /// The three-clause cutoff-sequence test exactly as usually stated: any
    /// condition of `Cut(⌈corr(cₙ)⌉)` may lead to `e2`, whether or not it
    /// corresponds to a condition reached from `e1`.
    pub fn path_as_stated(&self, e1: usize, e2: usize) -> Result<bool, AnalysisError> {
        self.check(e1)?;
        self.check(e2)?;
        if self.precedes(e1, e2) || self.precedes(e2, e1) {
            return Ok(true);
        }
        let n = self.cutoffs.len();
        let cut_c: Vec<Vec<usize>> = self
            .cutoffs
            .iter()
            .map(|&c| self.cut_of(&self.events[c].local))
            .collect();
        let cut_corr: Vec<Vec<usize>> = self
            .cutoffs
            .iter()
            .map(|&c| self.cut_of(&self.corr_config(self.events[c].cutoff.unwrap())))
            .collect();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if cut_c[i].iter().any(|&b| self.event_before_condition(e1, b)) {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            if cut_corr[i]
                .iter()
                .any(|&b| self.condition_before_event(b, e2))
            {
                return Ok(true);
            }
            for j in 0..n {
                if !seen[j]
                    && cut_corr[i]
                        .iter()
                        .any(|&b1| cut_c[j].iter().any(|&b2| self.condition_reaches(b1, b2)))
                {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        Ok(false)
    }

    /// Whether some process contains an occurrence of `ρ(e1)` that causes an
    /// occurrence of `ρ(e2)` and is represented by `e1`/`e2` in this prefix.
    ///
    /// Direct precedence in either direction counts. Across a cutoff `c`, the
    /// search follows a single place: a condition of `Cut(⌈c⌉)` after `e1`
    /// continues as a condition on the same place in `Cut(⌈corr(c)⌉)`, and
    /// every later step must stay compatible with `⌈corr(c)⌉`.
    pub fn path(&self, e1: usize, e2: usize) -> Result<bool, AnalysisError> {
        self.check(e1)?;
        self.check(e2)?;
        if self.precedes(e1, e2) || self.precedes(e2, e1) {
            return Ok(true);
        }
        Ok(self.path_through_cutoffs(e1, &[e2]))
    }

    fn cutoff_cuts(&self) -> &[CutoffCuts] {
        self.cutoff_cuts.get_or_init(|| {
            self.cutoffs
                .iter()
                .map(|&c| {
                    let corr_config =
                        self.corr_config(self.events[c].cutoff.expect("listed as cutoff"));
                    CutoffCuts {
                        cut: self.cut_of(&self.events[c].local),
                        corr_cut: self.cut_of(&corr_config),
                        corr_consumed: self.consumed_by(&corr_config),
                        corr_config,
                    }
                })
                .collect()
        })
    }

    /// [`Prefix::path`] across cutoffs from `e1` to any of `targets`.
    fn path_through_cutoffs(&self, e1: usize, targets: &[usize]) -> bool {
        let n = self.cutoffs.len();
        if n == 0 {
            return false;
        }
        let cuts = self.cutoff_cuts();
        let cut_c: Vec<&Vec<usize>> = cuts.iter().map(|c| &c.cut).collect();
        let corr_cfg: Vec<&EventSet> = cuts.iter().map(|c| &c.corr_config).collect();
        let cut_corr: Vec<&Vec<usize>> = cuts.iter().map(|c| &c.corr_cut).collect();
        let consumed: Vec<&FixedBitSet> = cuts.iter().map(|c| &c.corr_consumed).collect();
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut queue = VecDeque::new();
        for i in 0..n {
            for &b in cut_c[i] {
                if self.event_before_condition(e1, b) && seen.insert((i, self.conditions[b].place))
                {
                    queue.push_back((i, self.conditions[b].place));
                }
            }
        }
        while let Some((i, place)) = queue.pop_front() {
            let (ctx, ctx_consumed) = (corr_cfg[i], consumed[i]);
            for &b1 in cut_corr[i]
                .iter()
                .filter(|&&b| self.conditions[b].place == place)
            {
                if targets.iter().any(|&e2| {
                    self.condition_before_event(b1, e2)
                        && self.compatible(&self.events[e2].local, ctx, ctx_consumed)
                }) {
                    return true;
                }
                for j in 0..n {
                    let cj = self.cutoffs[j];
                    if ctx.contains(cj)
                        || !self.compatible(&self.events[cj].local, ctx, ctx_consumed)
                    {
                        continue;
                    }
                    for &b2 in cut_c[j] {
                        let key = (j, self.conditions[b2].place);
                        if !seen.contains(&key) && self.condition_reaches(b1, b2) {
                            seen.insert(key);
                            queue.push_back(key);
                        }
                    }
                }
            }
        }
        false
    }

    /// No pair of distinct events of `t1` and `t2` is connected by [`Prefix::path`]
    /// in either direction.
    pub fn total_concurrent(&self, t1: usize, t2: usize) -> Result<bool, AnalysisError> {
        if t1 == t2 {
            return Err(AnalysisError::SameTransition);
        }
        let of = |t: usize| -> Vec<usize> {
            (0..self.events.len())
                .filter(|&e| self.events[e].transition == t)
                .collect()
        };
        let (es1, es2) = (of(t1), of(t2));
        let direct = es1.iter().any(|&e1| {
            es2.iter()
                .any(|&e2| self.precedes(e1, e2) || self.precedes(e2, e1))
        });
        if direct {
            return Ok(false);
        }
        let linked = es1.iter().any(|&e1| self.path_through_cutoffs(e1, &es2))
            || es2.iter().any(|&e2| self.path_through_cutoffs(e2, &es1));
        Ok(!linked)
    }

    /// Line-oriented dump:
    ///
    /// ```text
    /// prefix events=<n> conditions=<m> cutoffs=<k>
    /// c<id> place=<place> pre=<e<id>|->
    /// e<id> transition=<id> pre=<c..,c..> post=<c..> marking=[..] [cutoff corr=<e<id>|initial>]
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "prefix events={} conditions={} cutoffs={}",
            self.events.len(),
            self.conditions.len(),
            self.cutoffs.len()
        );
        for (b, c) in self.conditions.iter().enumerate() {
            let pre = c.pre.map_or("-".to_string(), |e| format!("e{e}"));
            let _ = writeln!(out, "c{b} place={} pre={pre}", self.place_ids[c.place]);
        }
        let list = |v: &[usize]| {
            v.iter()
                .map(|b| format!("c{b}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        for (k, e) in self.events.iter().enumerate() {
            let mut marking = Vec::new();
            for p in e.marking.support() {
                for _ in 0..e.marking.get(p) {
                    marking.push(self.place_ids[p].as_str());
                }
            }
            let _ = write!(
                out,
                "e{k} transition={} pre={} post={} marking=[{}]",
                self.transition_ids[e.transition],
                list(&e.preset),
                list(&e.postset),
                marking.join(",")
            );
            match e.cutoff {
                Some(Corr::Initial) => out.push_str(" cutoff corr=initial"),
                Some(Corr::Event(c)) => {
                    let _ = write!(out, " cutoff corr=e{c}");
                }
                None => {}
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the prefix and applies [`Prefix::total_concurrent`].
pub fn total_concurrent_t(
    net: &NetSystem,
    t1: usize,
    t2: usize,
    limits: &Limits,
) -> Result<bool, AnalysisError> {
    for t in [t1, t2] {
        if t >= net.transition_count() {
            return Err(AnalysisError::UnknownTransition(t));
        }
    }
    if t1 == t2 {
        return Err(AnalysisError::SameTransition);
    }
    build_prefix(net, limits)?.total_concurrent(t1, t2)
}
