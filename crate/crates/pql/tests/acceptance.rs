//! Acceptance criteria A1–A11. Prints one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that the verdict lines appear in the
//! normal `cargo test` output. The process fails if any criterion fails,
//! except for criteria that need hardware this machine does not have; those
//! still print FAIL together with the reason.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use pql::bench::{
    generate_collection, index_collection, linear_fit, prefix, template_queries, time_queries,
};
use pql::fixtures;
use pql::generate::{label_pool, random_net, GenConfig};
use pql::index::{run_bot, BotOptions, RelationIndex};
use pql::oracle::{self, bounded_witnesses, oracle_pair, oracle_unary, OracleError};
use pql::petri::pnml::write_pnml;
use pql::petri::NetSystem;
use pql::query::{evaluate, parse, templates, EvalOptions, Query};
use pql::relations::{Analyzer, BinaryPredicate, Task, UnaryPredicate};
use pql::repository::{IndexStatus, Repository, Store};
use pql::statespace::{
    always_occurs_by_construction, build_graph, can_occur_by_construction, Limits,
};
use pql::unfolding::build_prefix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn singletons(net: &NetSystem) -> Vec<Task> {
    net.observable_labels()
        .into_iter()
        .map(Task::single)
        .collect()
}

fn t(l: &str) -> Task {
    Task::single(l)
}

// A1

fn a1() -> Verdict {
    let start = Instant::now();
    let net = fixtures::f5();
    let a = Analyzer::new(&net, Limits::default());
    use BinaryPredicate as B;
    use UnaryPredicate as U;
    let unary = [
        (U::CanOccur, t("a1"), true),
        (U::AlwaysOccurs, t("a1"), false),
        (U::AlwaysOccurs, t("b"), true),
        (U::AlwaysOccurs, t("c"), true),
        (U::AlwaysOccurs, t("d"), true),
        (U::AlwaysOccurs, t("e"), true),
        (U::AlwaysOccurs, Task::new(["a1", "a2"]).unwrap(), true),
    ];
    let binary = [
        (B::CanConflict, "b", "a1"),
        (B::CanCooccur, "b", "a1"),
        (B::Conflict, "a1", "a2"),
        (B::Cooccur, "b", "e"),
        (B::TotalCausal, "a1", "c"),
        (B::TotalConcurrent, "c", "d"),
    ];
    for (p, x, want) in &unary {
        let got = a.unary(*p, x).map_err(|e| e.to_string())?;
        ensure(got == *want, || format!("{p}({x}) = {got}"))?;
    }
    for (p, x, y) in binary {
        let got = a.binary(p, &t(x), &t(y)).map_err(|e| e.to_string())?;
        ensure(got, || format!("{p}({x}, {y}) = false"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "13 values exact in {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

// A2, A3

struct Corpus {
    nets: Vec<NetSystem>,
    resampled: usize,
}

fn acyclic_corpus(n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = GenConfig::small_acyclic();
    let mut nets = Vec::new();
    let mut resampled = 0;
    while nets.len() < n {
        let net = random_net(&mut rng, &cfg);
        // Nets whose process space exceeds the oracle budget are replaced.
        match oracle::enumerate_processes(&net) {
            Ok(_) => nets.push(net),
            Err(OracleError::TooLarge(_)) => resampled += 1,
            Err(e) => panic!("oracle on generated acyclic net: {e}"),
        }
    }
    Corpus { nets, resampled }
}

fn a2(corpus: &Corpus) -> Verdict {
    let start = Instant::now();
    let mut checks = 0usize;
    for (n, net) in corpus.nets.iter().enumerate() {
        ensure(
            net.transition_count() <= 8 && net.place_count() <= 10,
            || format!("net {n} too large"),
        )?;
        let a = Analyzer::new(net, Limits::default());
        let ts = singletons(net);
        for x in &ts {
            for p in UnaryPredicate::ALL {
                let got = a.unary(p, x).map_err(|e| e.to_string())?;
                let want = oracle_unary(net, p, x).map_err(|e| e.to_string())?;
                ensure(got == want, || {
                    format!(
                        "net {n}: {p}({x}) engine {got}, oracle {want}\n{}",
                        write_pnml(net)
                    )
                })?;
                checks += 1;
            }
            for y in &ts {
                let got = a.pair_values(x, y).map_err(|e| e.to_string())?;
                let want = oracle_pair(net, x, y).map_err(|e| e.to_string())?;
                ensure(got == want, || {
                    format!(
                        "net {n}: ({x}, {y}) engine {got:?}, oracle {want:?}\n{}",
                        write_pnml(net)
                    )
                })?;
                checks += BinaryPredicate::ALL.len();
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} nets ({} resampled over the oracle budget), {checks} predicate values, {:.1} s",
        corpus.nets.len(),
        corpus.resampled,
        elapsed.as_secs_f64()
    ))
}

fn a3(corpus: &Corpus) -> Verdict {
    let mut pairs = 0usize;
    for (n, net) in corpus.nets.iter().enumerate() {
        let procs = oracle::enumerate_processes(net)
            .map_err(|e| e.to_string())?
            .processes;
        let g = build_graph(net, &Limits::default()).map_err(|e| e.to_string())?;
        for t1 in 0..net.transition_count() {
            for t2 in 0..net.transition_count() {
                if t1 == t2 {
                    continue;
                }
                let got = g.total_causal_t(t1, t2).map_err(|e| e.to_string())?;
                let want = oracle::transitions_total_causal(&procs, t1, t2);
                ensure(got == want, || {
                    format!("net {n}: totalCausal(t{t1}, t{t2}) graph {got}, processes {want}")
                })?;
                pairs += 1;
            }
        }
        let a = Analyzer::new(net, Limits::default());
        let ts = singletons(net);
        for x in &ts {
            for y in &ts {
                let got = a
                    .binary(BinaryPredicate::TotalCausal, x, y)
                    .map_err(|e| e.to_string())?;
                let want = oracle::oracle_binary(net, BinaryPredicate::TotalCausal, x, y)
                    .map_err(|e| e.to_string())?;
                ensure(got == want, || {
                    format!("net {n}: totalCausal({x}, {y}) graph {got}, processes {want}")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!(
        "{pairs} transition and task pairs over {} nets",
        corpus.nets.len()
    ))
}

// A4

fn cyclic_corpus(n: usize) -> Vec<NetSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = GenConfig::small_cyclic();
    (0..n).map(|_| random_net(&mut rng, &cfg)).collect()
}

fn a4(nets: &[NetSystem]) -> Verdict {
    let start = Instant::now();
    let mut witnesses = [0usize; 3];
    let mut cyclic = 0;
    for (n, net) in nets.iter().enumerate() {
        cyclic += usize::from(net.is_cyclic());
        let a = Analyzer::new(net, Limits::default());
        let ts = singletons(net);
        for x in &ts {
            for y in &ts {
                let v = a.pair_values(x, y).map_err(|e| e.to_string())?;
                let w = bounded_witnesses(net, x, y, 12);
                if w.cooccur {
                    witnesses[0] += 1;
                    ensure(v.can_cooccur, || {
                        format!("net {n}: ({x}, {y}) co-occur but canCooccur = false")
                    })?;
                }
                if w.y_then_x {
                    witnesses[1] += 1;
                    ensure(!v.total_causal_xy, || {
                        format!("net {n}: {y} then {x} observed but totalCausal = true")
                    })?;
                }
                if w.causal_pair {
                    witnesses[2] += 1;
                    ensure(!v.total_concurrent, || {
                        format!("net {n}: causal ({x}, {y}) pair but totalConcurrent = true")
                    })?;
                }
            }
        }
    }
    ensure(cyclic == nets.len(), || {
        format!("only {cyclic} of {} nets are cyclic", nets.len())
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} cyclic nets, {} co-occurrence / {} order / {} causality witnesses, {:.1} s",
        nets.len(),
        witnesses[0],
        witnesses[1],
        witnesses[2],
        elapsed.as_secs_f64()
    ))
}

// A5

fn a5(nets: &[&NetSystem]) -> Verdict {
    let lim = Limits::default();
    let mut count = 0;
    for (n, net) in nets.iter().enumerate() {
        let g = build_graph(net, &lim).map_err(|e| e.to_string())?;
        for tr in 0..net.transition_count() {
            let direct = (
                g.can_occur_t(tr).map_err(|e| e.to_string())?,
                g.always_occurs_t(tr).map_err(|e| e.to_string())?,
            );
            let built = (
                can_occur_by_construction(net, tr, &lim).map_err(|e| e.to_string())?,
                always_occurs_by_construction(net, tr, &lim).map_err(|e| e.to_string())?,
            );
            ensure(direct == built, || {
                format!("net {n} t{tr}: graph {direct:?}, construction {built:?}")
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} transitions over {} nets", nets.len()))
}

// A6

fn a6() -> Verdict {
    let net = fixtures::f_loop();
    let prefix = build_prefix(&net, &Limits::default()).map_err(|e| e.to_string())?;
    let g = build_graph(&net, &Limits::default()).map_err(|e| e.to_string())?;
    ensure(!prefix.cutoffs().is_empty(), || "no cutoff".into())?;
    for &e in prefix.cutoffs() {
        let cut = prefix.cut(&prefix.local_config(e).map_err(|e| e.to_string())?);
        let m = prefix.cut_marking(&cut);
        ensure(Some(&m) == prefix.corr_marking(e).as_ref(), || {
            format!("cutoff e{e}: marking differs from its corr")
        })?;
    }
    let mut markings = BTreeSet::new();
    for e in 0..prefix.events().len() {
        let cut = prefix.cut(&prefix.local_config(e).map_err(|e| e.to_string())?);
        let m = prefix.cut_marking(&cut);
        ensure(g.space().find(&m).is_some(), || {
            format!("cut marking of e{e} is not reachable")
        })?;
        markings.insert(format!("{m:?}"));
    }
    Ok(format!(
        "{} events, {} cutoffs, {} distinct cut markings, all reachable",
        prefix.events().len(),
        prefix.cutoffs().len(),
        markings.len()
    ))
}

// A7

const SAMPLE_QUERIES: [&str; 10] = [
    r#"SELECT "ID" FROM "/Ten-Models-BPMN" WHERE CanOccur("D") AND Conflict("D","E");"#,
    r#"SELECT "Author", "Version" FROM "/Ten-Models-BPMN" WHERE AlwaysOccurs("C") OR Cooccur("B","C");"#,
    r#"SELECT * FROM * WHERE (CanOccur("G") AND (NOT Conflict("E","G"))) OR (TotalConcurrent("C","D") AND AlwaysOccurs("D"));"#,
    r#"SELECT "ID" FROM * WHERE CanOccur({"F","G"},ALL) AND AlwaysOccurs({"F","G"},ANY);"#,
    r#"SELECT "Date" FROM "/Ten-Models-BPMN" WHERE Cooccur("B",{"C","D"},ALL) AND TotalConcurrent("B",{"C","D"},ANY);"#,
    r#"SELECT * FROM * WHERE Conflict({"A","B"},{"E","F"},ANY) OR (Cooccur({"A","B"},{"E","F"},EACH) AND TotalCausal({"A","B"},{"E","F"},ALL));"#,
    r#"SELECT "ID" FROM * WHERE "C" IN (GetTasksAlwaysOccurs({"C"}) UNION GetTasksTotalCausal({"C"},{"B","D"},ALL));"#,
    r#"SELECT "ID" FROM * WHERE "G" IN (GetTasksCanOccur({"G"}) INTERSECT GetTasksConflict({"G"},{"D","E","F"},ANY));"#,
    r#"SELECT * FROM * WHERE GetTasksCooccur({"A","B","C"},{"D","E"},ANY) NOT EQUALS GetTasksTotalConcurrent({"A","B","C"},{"D","E"},ANY);"#,
    r#"SELECT * FROM * WHERE ({"A","B","E","F"} EXCEPT GetTasksCooccur({"A","B","E","F"},{"C","D"},ALL)) OVERLAPS WITH GetTasksConflict({"A","B","E","F"},{"C","D"},ANY);"#,
];

fn one_model_repo(net: NetSystem) -> Repository {
    let mut r = Repository::new();
    r.insert("m", net, "/", BTreeMap::new(), IndexStatus::Unindexed)
        .expect("valid id");
    r
}

fn holds(repo: &Repository, text: &str) -> Result<bool, String> {
    let q = parse(text).map_err(|e| format!("{text}: {e}"))?;
    let r = evaluate(&q, repo, None, &EvalOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.errors.is_empty(), || format!("{text}: {:?}", r.errors))?;
    Ok(!r.rows.is_empty())
}

fn lit(set: &BTreeSet<&str>) -> String {
    let items: Vec<String> = set.iter().map(|l| format!("{l:?}")).collect();
    format!("{{{}}}", items.join(","))
}

fn a7() -> Verdict {
    let mut parsed = 0;
    for text in SAMPLE_QUERIES {
        let q = parse(text).map_err(|e| format!("{text}: {e}"))?;
        let again = parse(&q.to_string()).map_err(|e| format!("reprint of {text}: {e}"))?;
        ensure(again == q, || format!("round trip changed {text}"))?;
        parsed += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool: Vec<String> = ["A", "B", "C", "D", "E", "F", "G"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let all = templates::all();
    for (code, _) in templates::SUBGROUPS {
        let group: Vec<_> = all.iter().filter(|t| t.subgroup == code).collect();
        for _ in 0..3 {
            let text = group
                .choose(&mut rng)
                .expect("non-empty subgroup")
                .instantiate_random(&mut rng, &pool);
            let q = parse(&text).map_err(|e| format!("{code}: {text}: {e}"))?;
            ensure(parse(&q.to_string()).ok() == Some(q.clone()), || {
                format!("round trip changed {text}")
            })?;
            parsed += 1;
        }
    }

    // Set precedence on sets where the stated grouping differs from the
    // left-to-right readings.
    let repo = one_model_repo(fixtures::f5());
    let s = |ls: &[&'static str]| ls.iter().copied().collect::<BTreeSet<&str>>();
    let (a, b, c, d, e, f) = (
        s(&["a"]),
        s(&["b", "c"]),
        s(&["b", "c", "d"]),
        s(&["c"]),
        s(&["d"]),
        s(&["c"]),
    );
    let de: BTreeSet<&str> = d.union(&e).copied().collect();
    let de_f: BTreeSet<&str> = de.difference(&f).copied().collect();
    let c_rest: BTreeSet<&str> = c.difference(&de_f).copied().collect();
    let b_c: BTreeSet<&str> = b.intersection(&c_rest).copied().collect();
    let stated: BTreeSet<&str> = a.union(&b_c).copied().collect();
    let left_nested: BTreeSet<&str> = {
        let c1: BTreeSet<&str> = c.difference(&de).copied().collect();
        let c2: BTreeSet<&str> = c1.difference(&f).copied().collect();
        a.union(&b.intersection(&c2).copied().collect())
            .copied()
            .collect()
    };
    ensure(stated != left_nested, || {
        "set fixture does not distinguish groupings".into()
    })?;
    let vars = format!(
        "a = {}; b = {}; c = {}; d = {}; e = {}; f = {};",
        lit(&a),
        lit(&b),
        lit(&c),
        lit(&d),
        lit(&e),
        lit(&f)
    );
    let set_query = |expected: &BTreeSet<&str>| {
        format!("{vars} SELECT * FROM * WHERE a UNION b INTERSECT c EXCEPT (d UNION e) EXCEPT f EQUALS {};", lit(expected))
    };
    ensure(holds(&repo, &set_query(&stated))?, || {
        "set expression differs from A ∪ (B ∩ (C \\ ((D ∪ E) \\ F)))".into()
    })?;
    ensure(!holds(&repo, &set_query(&left_nested))?, || {
        "set expression matches the left-nested reading".into()
    })?;

    // Logic precedence over all 32 truth assignments.
    let mut distinguishing = 0;
    for bits in 0..32u32 {
        let v: Vec<bool> = (0..5).map(|k| bits >> k & 1 == 1).collect();
        let word = |b: bool| if b { "TRUE" } else { "FALSE" };
        let text = format!(
            "SELECT * FROM * WHERE NOT ({} OR {} AND {}) OR {} AND {};",
            word(v[0]),
            word(v[1]),
            word(v[2]),
            word(v[3]),
            word(v[4])
        );
        let stated = !(v[0] || (v[1] && v[2])) || (v[3] && v[4]);
        let left_to_right = ((!((v[0] || v[1]) && v[2])) || v[3]) && v[4];
        distinguishing += usize::from(stated != left_to_right);
        ensure(holds(&repo, &text)? == stated, || {
            format!("{text} disagrees with (¬(a∨(b∧c)))∨(d∧e)")
        })?;
    }
    ensure(distinguishing > 0, || {
        "no assignment distinguishes the logic groupings".into()
    })?;
    Ok(format!(
        "{parsed} queries parsed and reprinted, both precedence examples hold"
    ))
}

// A8

fn random_set<'a, R: Rng>(rng: &mut R, labels: &[&'a str]) -> BTreeSet<&'a str> {
    let k = rng.gen_range(0..=3);
    labels.choose_multiple(rng, k).copied().collect()
}

fn explicit(quant_outer: bool, outer: &[String]) -> String {
    // quant_outer: true = ∀ (AND), false = ∃ (OR); empty sets give the unit.
    if outer.is_empty() {
        return if quant_outer {
            "TRUE".into()
        } else {
            "FALSE".into()
        };
    }
    let op = if quant_outer { " AND " } else { " OR " };
    let parts: Vec<String> = outer.iter().map(|p| format!("({p})")).collect();
    parts.join(op)
}

fn a8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let labels = ["a", "b", "c", "d", "e", "zz"];
    let cfg = GenConfig {
        labels: labels[..5].iter().map(|s| s.to_string()).collect(),
        ..GenConfig::small_acyclic()
    };
    let mut cases = 0usize;
    let quantifiers = [
        ("ANY", false, false),
        ("SOME", false, true),
        ("EACH", true, false),
        ("ALL", true, true),
    ];
    while cases < 1200 {
        let repo = one_model_repo(random_net(&mut rng, &cfg));
        for _ in 0..4 {
            let (x, y) = (random_set(&mut rng, &labels), random_set(&mut rng, &labels));
            let p = *BinaryPredicate::ALL.choose(&mut rng).expect("non-empty");
            // Set-set macros against the explicit double quantification.
            for (kw, outer_all, inner_all) in quantifiers {
                let macro_q = format!("SELECT * FROM * WHERE {p}({},{},{kw});", lit(&x), lit(&y));
                let rows: Vec<String> = x
                    .iter()
                    .map(|a| {
                        explicit(
                            inner_all,
                            &y.iter()
                                .map(|b| format!("{p}({a:?},{b:?})"))
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect();
                let explicit_q = format!("SELECT * FROM * WHERE {};", explicit(outer_all, &rows));
                ensure(
                    holds(&repo, &macro_q)? == holds(&repo, &explicit_q)?,
                    || format!("{macro_q} vs {explicit_q}"),
                )?;
                cases += 1;
            }
            // Task-set and unary macros.
            let a = labels.choose(&mut rng).expect("non-empty");
            let u = *UnaryPredicate::ALL.choose(&mut rng).expect("non-empty");
            for (kw, all) in [("ANY", false), ("ALL", true)] {
                let ts = format!("SELECT * FROM * WHERE {p}({a:?},{},{kw});", lit(&y));
                let ts_explicit = explicit(
                    all,
                    &y.iter()
                        .map(|b| format!("{p}({a:?},{b:?})"))
                        .collect::<Vec<_>>(),
                );
                ensure(
                    holds(&repo, &ts)?
                        == holds(&repo, &format!("SELECT * FROM * WHERE {ts_explicit};"))?,
                    || ts.clone(),
                )?;
                let un = format!("SELECT * FROM * WHERE {u}({},{kw});", lit(&x));
                let un_explicit = explicit(
                    all,
                    &x.iter().map(|b| format!("{u}({b:?})")).collect::<Vec<_>>(),
                );
                ensure(
                    holds(&repo, &un)?
                        == holds(&repo, &format!("SELECT * FROM * WHERE {un_explicit};"))?,
                    || un.clone(),
                )?;
                cases += 2;
            }
            // Logical tests.
            let atom = format!(
                "{p}({a:?},{:?})",
                labels.choose(&mut rng).expect("non-empty")
            );
            let base = holds(&repo, &format!("SELECT * FROM * WHERE {atom};"))?;
            for (test, want) in [
                ("IS TRUE", base),
                ("IS NOT FALSE", base),
                ("IS FALSE", !base),
                ("IS NOT TRUE", !base),
            ] {
                ensure(
                    holds(&repo, &format!("SELECT * FROM * WHERE {atom} {test};"))? == want,
                    || format!("{atom} {test}"),
                )?;
                cases += 1;
            }
            // Set comparisons against set algebra; tasks compared by label set.
            let comparisons = [
                ("EQUALS", x == y),
                ("NOT EQUALS", x != y),
                ("OVERLAPS WITH", !x.is_disjoint(&y)),
                ("IS SUBSET OF", x.is_subset(&y)),
                ("IS PROPER SUBSET OF", x.is_subset(&y) && x != y),
            ];
            for (op, want) in comparisons {
                let q = format!("SELECT * FROM * WHERE {} {op} {};", lit(&x), lit(&y));
                ensure(holds(&repo, &q)? == want, || q.clone())?;
                cases += 1;
            }
            // Overriding union: three declarations of one name.
            let z = random_set(&mut rng, &labels);
            let q = format!(
                "v = {}; w = v; v = {}; v = v UNION {}; SELECT * FROM * WHERE w EQUALS {} AND v EQUALS {};",
                lit(&x),
                lit(&y),
                lit(&z),
                lit(&x),
                lit(&y.union(&z).copied().collect())
            );
            ensure(holds(&repo, &q)?, || q.clone())?;
            cases += 1;
        }
    }
    Ok(format!("{cases} generated cases, no counterexample"))
}

// A9

fn outcome(
    repo: &Repository,
    index: Option<&RelationIndex>,
    q: &Query,
) -> Result<(Vec<String>, Vec<(String, String)>, usize), String> {
    let opts = EvalOptions {
        use_index: index.is_some(),
        ..EvalOptions::default()
    };
    let r = evaluate(q, repo, index, &opts).map_err(|e| e.to_string())?;
    Ok((
        r.rows.into_iter().map(|r| r.model).collect(),
        r.errors,
        r.stats.hits,
    ))
}

fn a9() -> Verdict {
    let repo = generate_collection(9, 16, 6, 12);
    let (index, _) =
        index_collection(&repo, &[0.75, 1.0], Limits::default(), 1).map_err(|e| e.to_string())?;
    let mut corpus: Vec<Query> = template_queries(&repo, None, 3, 99)
        .into_iter()
        .map(|(_, q)| q)
        .collect();
    for text in SAMPLE_QUERIES {
        corpus.push(parse(text).map_err(|e| e.to_string())?);
    }
    let mut hits = 0;
    for q in &corpus {
        let (rows_i, errors_i, h) = outcome(&repo, Some(&index), q)?;
        let (rows_f, errors_f, _) = outcome(&repo, None, q)?;
        ensure(rows_i == rows_f && errors_i == errors_f, || {
            format!("indexed {rows_i:?} vs fresh {rows_f:?} for {q}")
        })?;
        hits += h;
    }
    ensure(hits > 0, || "the index was never consulted".into())?;
    let mut widened = 0;
    let mut sim_queries = 0;
    for label in repo.vocabulary().labels() {
        for p in UnaryPredicate::ALL {
            let at = |theta: &str| {
                parse(&format!("SELECT * FROM * WHERE {p}({label:?}[{theta}]);"))
                    .expect("valid query")
            };
            let (loose, _, _) = outcome(&repo, Some(&index), &at("0.75"))?;
            let (strict, _, _) = outcome(&repo, Some(&index), &at("1.0"))?;
            let (loose_set, strict_set): (BTreeSet<_>, BTreeSet<_>) =
                (loose.iter().collect(), strict.iter().collect());
            ensure(strict_set.is_subset(&loose_set), || {
                format!("{p}({label:?}): θ=0.75 {loose:?} misses θ=1.0 {strict:?}")
            })?;
            widened += usize::from(loose_set.len() > strict_set.len());
            sim_queries += 1;
        }
    }
    Ok(format!(
        "{} corpus queries equal with and without the index ({hits} index hits); {sim_queries} similarity queries monotone, {widened} strictly wider",
        corpus.len()
    ))
}

// A10

struct Perf {
    fit_r2: f64,
    points: Vec<(f64, f64)>,
    one_thread_ms: f64,
    four_threads_ms: f64,
    check_ms: f64,
    elapsed: Duration,
}

fn best_of(runs: usize, mut f: impl FnMut() -> f64) -> f64 {
    (0..runs).map(|_| f()).fold(f64::INFINITY, f64::min)
}

fn measure_perf() -> Result<Perf, String> {
    let start = Instant::now();
    let repo = generate_collection(10, 100, 8, 40);
    let (index, _) =
        index_collection(&repo, &[0.75, 1.0], Limits::default(), 1).map_err(|e| e.to_string())?;
    let queries: Vec<Query> = template_queries(&repo, None, 1, 10)
        .into_iter()
        .map(|(_, q)| q)
        .collect();
    let opts = EvalOptions::default();
    // Sizes are interleaved across rounds so that drift hits every point alike.
    let sizes = [25, 50, 75, 100];
    let subs: Vec<Repository> = sizes.iter().map(|&n| prefix(&repo, n)).collect();
    let mut best = [f64::INFINITY; 4];
    for _ in 0..5 {
        for (k, sub) in subs.iter().enumerate() {
            best[k] = best[k].min(time_queries(sub, Some(&index), &queries, &opts).mean_query_ms());
        }
    }
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .zip(best)
        .map(|(&n, ms)| (n as f64, ms))
        .collect();
    let fit_r2 = linear_fit(&points).r2;
    let one_thread_ms = best_of(3, || {
        time_queries(
            &repo,
            Some(&index),
            &queries,
            &EvalOptions { threads: 1, ..opts },
        )
        .mean_query_ms()
    });
    let four_threads_ms = best_of(3, || {
        time_queries(
            &repo,
            Some(&index),
            &queries,
            &EvalOptions { threads: 4, ..opts },
        )
        .mean_query_ms()
    });

    let large = generate_collection(11, 12, 20, 40);
    let observable = large
        .models()
        .map(|m| {
            m.net
                .transitions()
                .iter()
                .filter(|t| !t.label.is_empty())
                .count()
        })
        .max()
        .unwrap_or(0);
    if observable > 20 {
        return Err(format!(
            "generated net with {observable} observable transitions"
        ));
    }
    let (large_index, _) =
        index_collection(&large, &[0.75, 1.0], Limits::default(), 1).map_err(|e| e.to_string())?;
    let cat1: Vec<Query> = template_queries(&large, Some(1), 3, 12)
        .into_iter()
        .map(|(_, q)| q)
        .collect();
    let check_ms = time_queries(&large, Some(&large_index), &cat1, &opts).mean_check_ms();
    Ok(Perf {
        fit_r2,
        points,
        one_thread_ms,
        four_threads_ms,
        check_ms,
        elapsed: start.elapsed(),
    })
}

// A11

fn a11() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = GenConfig::sized(5, label_pool(10));
    for k in 0..10 {
        let net = random_net(&mut rng, &cfg);
        store
            .store_model(&format!("m{k}"), &write_pnml(&net), "/", BTreeMap::new())
            .map_err(|e| e.to_string())?;
    }
    store
        .store_model("slow", &write_pnml(&fixtures::f5()), "/", BTreeMap::new())
        .map_err(|e| e.to_string())?;
    let store = Arc::new(store);
    let handles: Vec<_> = ["bot-1", "bot-2"]
        .into_iter()
        .map(|name| {
            let store = Arc::clone(&store);
            std::thread::spawn(move || {
                let opts = BotOptions {
                    sleep: Duration::from_millis(5),
                    max_idle_rounds: Some(2),
                    claim_delay: Duration::from_millis(20),
                    budget_overrides: [("slow".to_string(), Duration::ZERO)].into_iter().collect(),
                    ..BotOptions::new(name)
                };
                run_bot(&store, &opts)
            })
        })
        .collect();
    let mut reports = Vec::new();
    for h in handles {
        reports.push(
            h.join()
                .map_err(|_| "bot panicked".to_string())?
                .map_err(|e| e.to_string())?,
        );
    }
    let mut indexed: Vec<String> = reports.iter().flat_map(|r| r.indexed.clone()).collect();
    indexed.sort();
    let want: Vec<String> = (0..10).map(|k| format!("m{k}")).collect();
    ensure(indexed == want, || format!("indexed {indexed:?}"))?;
    let refused: Vec<_> = reports
        .iter()
        .flat_map(|r| r.cannot_index.clone())
        .collect();
    ensure(
        refused.len() == 1 && refused[0].0 == "slow" && refused[0].1.contains("within 0s"),
        || format!("refused {refused:?}"),
    )?;
    let log = std::fs::read_to_string(store.index_log_path()).map_err(|e| e.to_string())?;
    for id in &want {
        let commits = log.lines().filter(|l| *l == format!("C\t{id}")).count();
        ensure(commits == 1, || format!("{id} committed {commits} times"))?;
    }
    ensure(!log.lines().any(|l| l == "C\tslow"), || {
        "zero-budget model has index records".into()
    })?;
    let repo = store.load().map_err(|e| e.to_string())?;
    for m in repo.models() {
        let ok = match m.id.as_str() {
            "slow" => matches!(m.status, IndexStatus::CannotIndex { .. }),
            _ => matches!(m.status, IndexStatus::Indexed { .. }),
        };
        ensure(ok, || format!("{} ends as {}", m.id, m.status.label()))?;
    }
    let split: Vec<usize> = reports
        .iter()
        .map(|r| r.indexed.len() + r.cannot_index.len())
        .collect();
    Ok(format!("10 models indexed once each (jobs per bot {split:?}); zero-budget model marked cannot-index"))
}

// Driver

struct Outcome {
    id: &'static str,
    verdict: Verdict,
    /// Failure is explained by missing hardware rather than by the code.
    environmental: bool,
}

fn run(id: &'static str, f: impl FnOnce() -> Verdict) -> Outcome {
    let start = Instant::now();
    let verdict = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let out = Outcome {
        id,
        verdict,
        environmental: false,
    };
    report(&out, start.elapsed());
    out
}

fn report(o: &Outcome, took: Duration) {
    match &o.verdict {
        Ok(detail) => println!("{} PASS  {detail} [{:.2}s]", o.id, took.as_secs_f64()),
        Err(reason) => println!("{} FAIL  {reason} [{:.2}s]", o.id, took.as_secs_f64()),
    }
}

fn main() {
    // Only the acceptance run itself; `cargo test -- --list` and filters get an empty run.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = Vec::new();
    outcomes.push(run("A1", a1));
    let corpus = acyclic_corpus(220);
    outcomes.push(run("A2", || a2(&corpus)));
    outcomes.push(run("A3", || a3(&corpus)));
    let cyclic = cyclic_corpus(60);
    outcomes.push(run("A4", || a4(&cyclic)));
    let f5 = fixtures::f5();
    let f_loop = fixtures::f_loop();
    let parallel = fixtures::parallel_choices();
    let mut construction_nets: Vec<&NetSystem> = vec![&f5, &f_loop, &parallel];
    construction_nets.extend(corpus.nets.iter().take(100));
    construction_nets.extend(cyclic.iter());
    outcomes.push(run("A5", || a5(&construction_nets)));
    outcomes.push(run("A6", a6));
    outcomes.push(run("A7", a7));
    outcomes.push(run("A8", a8));
    outcomes.push(run("A9", a9));

    let start = Instant::now();
    let perf = catch_unwind(measure_perf).unwrap_or_else(|_| Err("measurement panicked".into()));
    let took = start.elapsed();
    let cpus = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let (a, b, c) = match &perf {
        Ok(p) => {
            let pts: Vec<String> = p
                .points
                .iter()
                .map(|(n, ms)| format!("{n:.0}:{ms:.2}ms"))
                .collect();
            let a = if p.fit_r2 >= 0.9 && p.elapsed < Duration::from_secs(600) {
                Ok(format!("R² {:.3} over [{}]", p.fit_r2, pts.join(", ")))
            } else {
                Err(format!(
                    "R² {:.3} over [{}], total {:.0}s",
                    p.fit_r2,
                    pts.join(", "),
                    p.elapsed.as_secs_f64()
                ))
            };
            let ratio = p.four_threads_ms / p.one_thread_ms;
            let text = format!(
                "4 threads {:.2} ms vs 1 thread {:.2} ms per query (ratio {ratio:.2}, {cpus} CPU(s), parallel build {})",
                p.four_threads_ms,
                p.one_thread_ms,
                pql::parallel::is_parallel()
            );
            let b = if ratio <= 0.6 { Ok(text) } else { Err(text) };
            let text = format!("{:.3} ms per indexed Category-1 model check", p.check_ms);
            let c = if p.check_ms <= 50.0 {
                Ok(text)
            } else {
                Err(text)
            };
            (a, b, c)
        }
        Err(e) => (Err(e.clone()), Err(e.clone()), Err(e.clone())),
    };
    for (id, verdict, environmental) in [
        ("A10a", a, false),
        ("A10b", b, cpus < 4),
        ("A10c", c, false),
    ] {
        let o = Outcome {
            id,
            verdict,
            environmental: environmental && perf.is_ok(),
        };
        report(&o, took);
        outcomes.push(o);
    }
    outcomes.push(run("A11", a11));

    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| o.verdict.is_err()).collect();
    let blocking: Vec<&str> = failed
        .iter()
        .filter(|o| !o.environmental)
        .map(|o| o.id)
        .collect();
    for o in failed.iter().filter(|o| o.environmental) {
        println!(
            "{}: needs at least 4 CPUs, this machine has {cpus}; not counted as a code failure",
            o.id
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if !blocking.is_empty() {
        println!("failing: {}", blocking.join(", "));
        std::process::exit(1);
    }
}
