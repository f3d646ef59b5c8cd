//! Canonical text form of queries and the parse-tree dump.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialise")
}

impl Display for TaskExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TaskExpr::Exact(l) => f.write_str(&quote(l)),
            TaskExpr::DefSim(l) => write!(f, "~{}", quote(l)),
            TaskExpr::Sim(l, s) => write!(f, "{}[{s}]", quote(l)),
        }
    }
}

fn join<T: Display>(items: &[T], sep: &str) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

struct Paren<'a, T>(&'a T, bool);

impl<T: Display> Display for Paren<'_, T> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            self.0.fmt(f)
        }
    }
}

impl Display for SetExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Var(v) => f.write_str(v),
            SetExpr::AllTasks => f.write_str("GetTasks()"),
            SetExpr::Literal(ts) => write!(f, "{{{}}}", join(ts, ",")),
            SetExpr::UnaryConstruction(p, s) => write!(f, "GetTasks{p}({s})"),
            SetExpr::BinaryConstruction(p, a, b, q) => {
                write!(f, "GetTasks{p}({a},{b},{})", q.keyword())
            }
            SetExpr::Union(parts) => {
                let parts: Vec<String> = parts
                    .iter()
                    .map(|s| Paren(s, matches!(s, SetExpr::Union(_))).to_string())
                    .collect();
                f.write_str(&parts.join(" UNION "))
            }
            SetExpr::Intersection(parts) => {
                let parts: Vec<String> = parts
                    .iter()
                    .map(|s| {
                        Paren(s, matches!(s, SetExpr::Union(_) | SetExpr::Intersection(_)))
                            .to_string()
                    })
                    .collect();
                f.write_str(&parts.join(" INTERSECT "))
            }
            SetExpr::Difference(a, b) => {
                let left = matches!(
                    **a,
                    SetExpr::Union(_) | SetExpr::Intersection(_) | SetExpr::Difference(..)
                );
                let right = matches!(**b, SetExpr::Union(_) | SetExpr::Intersection(_));
                write!(f, "{} EXCEPT {}", Paren(&**a, left), Paren(&**b, right))
            }
        }
    }
}

impl Display for Predicate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        use Predicate as P;
        match self {
            P::Unary(p, t) => write!(f, "{p}({t})"),
            P::Binary(p, a, b) => write!(f, "{p}({a},{b})"),
            P::UnaryMacro(p, s, q) => write!(f, "{p}({s},{})", q.keyword()),
            P::BinaryMacroTaskSet(p, t, s, q) => write!(f, "{p}({t},{s},{})", q.keyword()),
            P::BinaryMacroSetSet(p, a, b, q) => write!(f, "{p}({a},{b},{})", q.keyword()),
            P::In(t, s) => write!(f, "{t} IN {s}"),
            P::Compare(a, op, b) => write!(f, "{a} {} {b}", op.keywords()),
            P::Truth(true) => f.write_str("TRUE"),
            P::Truth(false) => f.write_str("FALSE"),
            P::Not(p) => write!(
                f,
                "NOT {}",
                Paren(&**p, matches!(**p, P::And(_) | P::Or(_) | P::Test(..)))
            ),
            P::Test(p, t) => write!(
                f,
                "{} {}",
                Paren(&**p, matches!(**p, P::And(_) | P::Or(_) | P::Test(..))),
                t.keywords()
            ),
            P::And(parts) => {
                let parts: Vec<String> = parts
                    .iter()
                    .map(|p| Paren(p, matches!(p, P::And(_) | P::Or(_))).to_string())
                    .collect();
                f.write_str(&parts.join(" AND "))
            }
            P::Or(parts) => {
                let parts: Vec<String> = parts
                    .iter()
                    .map(|p| Paren(p, matches!(p, P::Or(_))).to_string())
                    .collect();
                f.write_str(&parts.join(" OR "))
            }
        }
    }
}

impl Display for Query {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for v in &self.vars {
            writeln!(f, "{} = {};", v.name, v.value)?;
        }
        let atts: Vec<String> = self
            .atts
            .iter()
            .map(|a| match a {
                Attribute::Universe => "*".to_string(),
                Attribute::Name(n) => quote(n),
            })
            .collect();
        let locs: Vec<String> = self
            .locs
            .iter()
            .map(|l| match l {
                Location::Universe => "*".to_string(),
                Location::Path(p) => quote(p),
            })
            .collect();
        write!(f, "SELECT {} FROM {}", atts.join(", "), locs.join(", "))?;
        if let Some(p) = &self.pred {
            write!(f, " WHERE {p}")?;
        }
        f.write_str(";")
    }
}

/// Indented tree of a query, two spaces per level.
pub fn dump_parse_tree(q: &Query) -> String {
    let mut out = String::from("Query\n");
    for v in &q.vars {
        let _ = writeln!(out, "  Variable {}", v.name);
        set_tree(&mut out, &v.value, 2);
    }
    out.push_str("  Attributes\n");
    for a in &q.atts {
        let _ = match a {
            Attribute::Universe => writeln!(out, "    Universe"),
            Attribute::Name(n) => writeln!(out, "    Attribute {}", quote(n)),
        };
    }
    out.push_str("  Locations\n");
    for l in &q.locs {
        let _ = match l {
            Location::Universe => writeln!(out, "    Universe"),
            Location::Path(p) => writeln!(out, "    Location {}", quote(p)),
        };
    }
    if let Some(p) = &q.pred {
        out.push_str("  Where\n");
        pred_tree(&mut out, p, 2);
    }
    out
}

fn line(out: &mut String, depth: usize, text: impl Display) {
    let _ = writeln!(out, "{}{text}", "  ".repeat(depth));
}

fn task_tree(out: &mut String, t: &TaskExpr, depth: usize) {
    match t {
        TaskExpr::Exact(l) => line(out, depth, format_args!("ExactTask {}", quote(l))),
        TaskExpr::DefSim(l) => line(out, depth, format_args!("DefSimTask {}", quote(l))),
        TaskExpr::Sim(l, s) => line(out, depth, format_args!("SimTask {} {s}", quote(l))),
    }
}

fn set_tree(out: &mut String, s: &SetExpr, depth: usize) {
    match s {
        SetExpr::Var(v) => line(out, depth, format_args!("Variable {v}")),
        SetExpr::AllTasks => line(out, depth, "SetOfAllTasks"),
        SetExpr::Literal(ts) => {
            line(out, depth, "SetOfTasks");
            ts.iter().for_each(|t| task_tree(out, t, depth + 1));
        }
        SetExpr::UnaryConstruction(p, a) => {
            line(out, depth, format_args!("UnaryPredicateConstruction {p}"));
            set_tree(out, a, depth + 1);
        }
        SetExpr::BinaryConstruction(p, a, b, q) => {
            line(
                out,
                depth,
                format_args!("BinaryPredicateConstruction {p} {}", q.keyword()),
            );
            set_tree(out, a, depth + 1);
            set_tree(out, b, depth + 1);
        }
        SetExpr::Union(parts) => {
            line(out, depth, "Union");
            parts.iter().for_each(|p| set_tree(out, p, depth + 1));
        }
        SetExpr::Intersection(parts) => {
            line(out, depth, "Intersection");
            parts.iter().for_each(|p| set_tree(out, p, depth + 1));
        }
        SetExpr::Difference(a, b) => {
            line(out, depth, "Difference");
            set_tree(out, a, depth + 1);
            set_tree(out, b, depth + 1);
        }
    }
}

fn pred_tree(out: &mut String, p: &Predicate, depth: usize) {
    use Predicate as P;
    match p {
        P::Unary(name, t) => {
            line(out, depth, format_args!("UnaryPredicate {name}"));
            task_tree(out, t, depth + 1);
        }
        P::Binary(name, a, b) => {
            line(out, depth, format_args!("BinaryPredicate {name}"));
            task_tree(out, a, depth + 1);
            task_tree(out, b, depth + 1);
        }
        P::UnaryMacro(name, s, q) => {
            line(
                out,
                depth,
                format_args!("UnaryPredicateMacro {name} {}", q.keyword()),
            );
            set_tree(out, s, depth + 1);
        }
        P::BinaryMacroTaskSet(name, t, s, q) => {
            line(
                out,
                depth,
                format_args!("BinaryPredicateMacroTaskSet {name} {}", q.keyword()),
            );
            task_tree(out, t, depth + 1);
            set_tree(out, s, depth + 1);
        }
        P::BinaryMacroSetSet(name, a, b, q) => {
            line(
                out,
                depth,
                format_args!("BinaryPredicateMacroSetSet {name} {}", q.keyword()),
            );
            set_tree(out, a, depth + 1);
            set_tree(out, b, depth + 1);
        }
        P::In(t, s) => {
            line(out, depth, "TaskInSetOfTasks");
            task_tree(out, t, depth + 1);
            set_tree(out, s, depth + 1);
        }
        P::Compare(a, op, b) => {
            line(out, depth, format_args!("SetComparison {}", op.keywords()));
            set_tree(out, a, depth + 1);
            set_tree(out, b, depth + 1);
        }
        P::Truth(v) => line(
            out,
            depth,
            format_args!("TruthValue {}", if *v { "TRUE" } else { "FALSE" }),
        ),
        P::Not(q) => {
            line(out, depth, "Negation");
            pred_tree(out, q, depth + 1);
        }
        P::And(parts) => {
            line(out, depth, "Conjunction");
            parts.iter().for_each(|q| pred_tree(out, q, depth + 1));
        }
        P::Or(parts) => {
            line(out, depth, "Disjunction");
            parts.iter().for_each(|q| pred_tree(out, q, depth + 1));
        }
        P::Test(q, t) => {
            line(out, depth, format_args!("LogicalTest {}", t.keywords()));
            pred_tree(out, q, depth + 1);
        }
    }
}
