//! Recursive-descent parser for PQL.
//!
//! Keywords are upper case and predicate names mixed case, both matched
//! exactly. Precedence follows the grammar: `NOT` binds tighter than `AND`,
//! which binds tighter than `OR`; `EXCEPT` (right-nested) binds tighter than
//! `INTERSECT`, which binds tighter than `UNION`. A `(` at the start of a
//! proposition may open either a predicate or a set of tasks; the parser tries
//! the predicate first and backtracks.

use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let q = p.query()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(q)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

fn furthest(a: ParseError, b: ParseError) -> ParseError {
    match (a.line, a.col).cmp(&(b.line, b.col)) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            let expected: BTreeSet<String> = a.expected.into_iter().chain(b.expected).collect();
            ParseError {
                expected: expected.into_iter().collect(),
                ..b
            }
        }
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            message: format!("unexpected {}", t.tok),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn query(&mut self) -> PResult<Query> {
        let mut vars = Vec::new();
        while let (Tok::Var(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1)) {
            self.bump();
            self.bump();
            let value = self.set()?;
            self.expect(Tok::Semi, ";")?;
            vars.push(Variable { name, value });
        }
        if !self.eat(&Tok::Select) {
            return Err(self.error(&["SELECT", "variable"]));
        }
        let atts = self
            .list("attribute name")?
            .into_iter()
            .map(|a| a.map_or(Attribute::Universe, Attribute::Name))
            .collect();
        self.expect(Tok::From, "FROM")?;
        let locs = self
            .list("location path")?
            .into_iter()
            .map(|l| l.map_or(Location::Universe, Location::Path))
            .collect();
        let pred = if self.eat(&Tok::Where) {
            Some(self.predicate()?)
        } else {
            None
        };
        if !self.eat(&Tok::Semi) {
            return Err(self.error(if pred.is_some() {
                &[";", "AND", "OR"]
            } else {
                &[";", "WHERE", ","]
            }));
        }
        Ok(Query {
            vars,
            atts,
            locs,
            pred,
        })
    }

    /// `*` or strings, comma separated; `None` stands for `*`.
    fn list(&mut self, what: &str) -> PResult<Vec<Option<String>>> {
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Star => {
                    self.bump();
                    out.push(None);
                }
                Tok::Str(s) => {
                    self.bump();
                    out.push(Some(s));
                }
                _ => return Err(self.error(&["*", what])),
            }
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn task(&mut self) -> PResult<TaskExpr> {
        let approx = self.eat(&Tok::Tilde);
        let label = match self.peek().clone() {
            Tok::Str(s) => s,
            _ => return Err(self.error(&["string"])),
        };
        if label.is_empty() {
            return Err(ParseError {
                message: "empty task label".into(),
                ..self.error(&[])
            });
        }
        self.bump();
        if approx {
            return Ok(TaskExpr::DefSim(label));
        }
        if !self.eat(&Tok::LBracket) {
            return Ok(TaskExpr::Exact(label));
        }
        let Tok::Number(n) = self.peek().clone() else {
            return Err(self.error(&["similarity"]));
        };
        let value = similarity(&n).ok_or_else(|| ParseError {
            message: format!("invalid similarity {n}; expected a number in [0, 1]"),
            ..self.error(&[])
        })?;
        self.bump();
        self.expect(Tok::RBracket, "]")?;
        Ok(TaskExpr::Sim(label, value))
    }

    fn starts_task(&self) -> bool {
        matches!(self.peek(), Tok::Str(_) | Tok::Tilde)
    }

    fn quantifier(&mut self, allowed: &[Quantifier]) -> PResult<Quantifier> {
        let q = match self.peek() {
            Tok::Any => Quantifier::Any,
            Tok::Some => Quantifier::Some,
            Tok::Each => Quantifier::Each,
            Tok::All => Quantifier::All,
            _ => Quantifier::Any,
        };
        let names: Vec<&str> = allowed.iter().map(|q| q.keyword()).collect();
        let is_quantifier = matches!(self.peek(), Tok::Any | Tok::Some | Tok::Each | Tok::All);
        if is_quantifier && allowed.contains(&q) {
            self.bump();
            Ok(q)
        } else {
            Err(self.error(&names))
        }
    }

    // Sets.

    fn set(&mut self) -> PResult<SetExpr> {
        let mut parts = vec![self.intersection()?];
        while self.eat(&Tok::Union) {
            parts.push(self.intersection()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            SetExpr::Union(parts)
        })
    }

    fn intersection(&mut self) -> PResult<SetExpr> {
        let mut parts = vec![self.difference()?];
        while self.eat(&Tok::Intersect) {
            parts.push(self.difference()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            SetExpr::Intersection(parts)
        })
    }

    fn difference(&mut self) -> PResult<SetExpr> {
        let left = self.tasks()?;
        if self.eat(&Tok::Except) {
            let right = self.difference()?;
            return Ok(SetExpr::Difference(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn tasks(&mut self) -> PResult<SetExpr> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(SetExpr::Var(v))
            }
            Tok::LBrace => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        items.push(self.task()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        if !self.eat(&Tok::Comma) {
                            return Err(self.error(&[",", "}"]));
                        }
                    }
                }
                Ok(SetExpr::Literal(items))
            }
            Tok::LParen => {
                self.bump();
                let s = self.set()?;
                self.expect(Tok::RParen, ")")?;
                Ok(s)
            }
            Tok::GetTasks => {
                self.bump();
                match self.bump() {
                    Tok::LParen => {
                        self.expect(Tok::RParen, ")")?;
                        Ok(SetExpr::AllTasks)
                    }
                    Tok::Unary(p) => {
                        self.expect(Tok::LParen, "(")?;
                        let s = self.set()?;
                        self.expect(Tok::RParen, ")")?;
                        Ok(SetExpr::UnaryConstruction(p, Box::new(s)))
                    }
                    Tok::Binary(p) => {
                        self.expect(Tok::LParen, "(")?;
                        let a = self.set()?;
                        self.expect(Tok::Comma, ",")?;
                        let b = self.set()?;
                        self.expect(Tok::Comma, ",")?;
                        let q = self.quantifier(&[Quantifier::Any, Quantifier::All])?;
                        self.expect(Tok::RParen, ")")?;
                        Ok(SetExpr::BinaryConstruction(p, Box::new(a), Box::new(b), q))
                    }
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&["(", "predicate name"]))
                    }
                }
            }
            _ => Err(self.error(&["variable", "{", "(", "GetTasks"])),
        }
    }

    // Predicates.

    fn predicate(&mut self) -> PResult<Predicate> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Predicate::Or(parts)
        })
    }

    fn conjunction(&mut self) -> PResult<Predicate> {
        let mut parts = vec![self.tested()?];
        while self.eat(&Tok::And) {
            parts.push(self.tested()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Predicate::And(parts)
        })
    }

    fn tested(&mut self) -> PResult<Predicate> {
        let p = self.proposition()?;
        if !self.eat(&Tok::Is) {
            return Ok(p);
        }
        let negated = self.eat(&Tok::Not);
        let test = match (self.peek(), negated) {
            (Tok::True, false) => LogicalTest::IsTrue,
            (Tok::True, true) => LogicalTest::IsNotTrue,
            (Tok::False, false) => LogicalTest::IsFalse,
            (Tok::False, true) => LogicalTest::IsNotFalse,
            _ => {
                return Err(self.error(if negated {
                    &["TRUE", "FALSE"]
                } else {
                    &["NOT", "TRUE", "FALSE"]
                }))
            }
        };
        self.bump();
        Ok(Predicate::Test(Box::new(p), test))
    }

    fn proposition(&mut self) -> PResult<Predicate> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Predicate::Not(Box::new(self.proposition()?)))
            }
            Tok::True => {
                self.bump();
                Ok(Predicate::Truth(true))
            }
            Tok::False => {
                self.bump();
                Ok(Predicate::Truth(false))
            }
            Tok::Unary(p) => {
                self.bump();
                self.expect(Tok::LParen, "(")?;
                if self.starts_task() {
                    let t = self.task()?;
                    self.expect(Tok::RParen, ")")?;
                    return Ok(Predicate::Unary(p, t));
                }
                let s = self.set()?;
                self.expect(Tok::Comma, ",")?;
                let q = self.quantifier(&[Quantifier::Any, Quantifier::All])?;
                self.expect(Tok::RParen, ")")?;
                Ok(Predicate::UnaryMacro(p, s, q))
            }
            Tok::Binary(p) => {
                self.bump();
                self.expect(Tok::LParen, "(")?;
                if self.starts_task() {
                    let t = self.task()?;
                    self.expect(Tok::Comma, ",")?;
                    if self.starts_task() {
                        let u = self.task()?;
                        self.expect(Tok::RParen, ")")?;
                        return Ok(Predicate::Binary(p, t, u));
                    }
                    let s = self.set()?;
                    self.expect(Tok::Comma, ",")?;
                    let q = self.quantifier(&[Quantifier::Any, Quantifier::All])?;
                    self.expect(Tok::RParen, ")")?;
                    return Ok(Predicate::BinaryMacroTaskSet(p, t, s, q));
                }
                let a = self.set()?;
                self.expect(Tok::Comma, ",")?;
                let b = self.set()?;
                self.expect(Tok::Comma, ",")?;
                let q = self.quantifier(&[
                    Quantifier::Any,
                    Quantifier::Some,
                    Quantifier::Each,
                    Quantifier::All,
                ])?;
                self.expect(Tok::RParen, ")")?;
                Ok(Predicate::BinaryMacroSetSet(p, a, b, q))
            }
            Tok::Str(_) | Tok::Tilde => {
                let t = self.task()?;
                self.expect(Tok::In, "IN")?;
                Ok(Predicate::In(t, self.set()?))
            }
            Tok::LParen => {
                let start = self.pos;
                self.bump();
                let grouped = self
                    .predicate()
                    .and_then(|p| self.expect(Tok::RParen, ")").map(|_| p));
                match grouped {
                    Ok(p) => Ok(p),
                    Err(e1) => {
                        self.pos = start;
                        self.comparison().map_err(|e2| furthest(e1, e2))
                    }
                }
            }
            Tok::Var(_) | Tok::LBrace | Tok::GetTasks => self.comparison(),
            _ => Err(self.error(&[
                "predicate",
                "NOT",
                "TRUE",
                "FALSE",
                "task",
                "set of tasks",
                "(",
            ])),
        }
    }

    fn comparison(&mut self) -> PResult<Predicate> {
        let a = self.set()?;
        let op = match (
            self.peek().clone(),
            self.peek_at(1).clone(),
            self.peek_at(2).clone(),
        ) {
            (Tok::Equals, ..) => SetComparison::Identical,
            (Tok::Not, Tok::Equals, _) => SetComparison::Different,
            (Tok::Overlaps, Tok::With, _) => SetComparison::OverlapsWith,
            (Tok::Is, Tok::Subset, Tok::Of) => SetComparison::SubsetOf,
            (Tok::Is, Tok::Proper, Tok::Subset) => SetComparison::ProperSubsetOf,
            _ => {
                return Err(self.error(&[
                    "EQUALS",
                    "NOT EQUALS",
                    "OVERLAPS WITH",
                    "IS SUBSET OF",
                    "IS PROPER SUBSET OF",
                    "UNION",
                    "INTERSECT",
                    "EXCEPT",
                ]))
            }
        };
        let words = op.keywords().split(' ').count();
        for _ in 0..words {
            self.bump();
        }
        let b = self.set()?;
        Ok(Predicate::Compare(a, op, b))
    }
}

/// `1`, `0`, `0.d+`, `.d+`; `1.0...` is also accepted.
fn similarity(text: &str) -> Option<f64> {
    let ok = match text.split_once('.') {
        None => text == "0" || text == "1",
        Some((int, frac)) => {
            let digits = !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit());
            digits
                && (int.is_empty() || int == "0" || (int == "1" && frac.chars().all(|c| c == '0')))
        }
    };
    let v: f64 = text.parse().ok().filter(|_| ok)?;
    (0.0..=1.0).contains(&v).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::{BinaryPredicate as B, UnaryPredicate as U};

    fn exact(l: &str) -> TaskExpr {
        TaskExpr::Exact(l.into())
    }

    fn pred(text: &str) -> Predicate {
        parse(&format!("SELECT * FROM * WHERE {text};"))
            .unwrap()
            .pred
            .unwrap()
    }

    #[test]
    fn minimal_query() {
        let q = parse("SELECT * FROM * ;").unwrap();
        assert_eq!(
            q,
            Query {
                vars: vec![],
                atts: vec![Attribute::Universe],
                locs: vec![Location::Universe],
                pred: None
            }
        );
    }

    #[test]
    fn first_sample_query() {
        let q = parse(
            r#"SELECT "ID" FROM "/Ten-Models-BPMN" WHERE CanOccur("D") AND Conflict("D","E");"#,
        )
        .unwrap();
        assert!(q.vars.is_empty());
        assert_eq!(q.atts, vec![Attribute::Name("ID".into())]);
        assert_eq!(q.locs, vec![Location::Path("/Ten-Models-BPMN".into())]);
        assert_eq!(
            q.pred,
            Some(Predicate::And(vec![
                Predicate::Unary(U::CanOccur, exact("D")),
                Predicate::Binary(B::Conflict, exact("D"), exact("E"))
            ]))
        );
    }

    #[test]
    fn variables_and_membership() {
        let q = parse(r#"x = {"A"}; SELECT * FROM * WHERE "A" IN x;"#).unwrap();
        assert_eq!(
            q.vars,
            vec![Variable {
                name: "x".into(),
                value: SetExpr::Literal(vec![exact("A")])
            }]
        );
        assert_eq!(
            q.pred,
            Some(Predicate::In(exact("A"), SetExpr::Var("x".into())))
        );
    }

    #[test]
    fn tasks() {
        assert_eq!(
            pred(r#"CanOccur(~"a")"#),
            Predicate::Unary(U::CanOccur, TaskExpr::DefSim("a".into()))
        );
        assert_eq!(
            pred(r#"CanOccur("a"[.5])"#),
            Predicate::Unary(U::CanOccur, TaskExpr::Sim("a".into(), 0.5))
        );
        assert_eq!(
            pred(r#"CanOccur("a"[1])"#),
            Predicate::Unary(U::CanOccur, TaskExpr::Sim("a".into(), 1.0))
        );
        assert_eq!(
            pred(r#"CanOccur("a"[1.0])"#),
            Predicate::Unary(U::CanOccur, TaskExpr::Sim("a".into(), 1.0))
        );
        for bad in ["1.5", "2", "0.", "00.5", "1.01", ".", "0..1"] {
            assert!(
                parse(&format!(r#"SELECT * FROM * WHERE CanOccur("a"[{bad}]);"#)).is_err(),
                "{bad}"
            );
        }
        assert!(parse(r#"SELECT * FROM * WHERE CanOccur("");"#).is_err());
    }

    #[test]
    fn logic_precedence() {
        // NOT (a OR b AND c) OR d AND e
        let p = pred("NOT (TRUE OR FALSE AND TRUE) OR FALSE AND TRUE");
        let inner = Predicate::Or(vec![
            Predicate::Truth(true),
            Predicate::And(vec![Predicate::Truth(false), Predicate::Truth(true)]),
        ]);
        let want = Predicate::Or(vec![
            Predicate::Not(Box::new(inner)),
            Predicate::And(vec![Predicate::Truth(false), Predicate::Truth(true)]),
        ]);
        assert_eq!(p, want);
        assert_eq!(
            pred("NOT TRUE IS FALSE"),
            Predicate::Test(
                Box::new(Predicate::Not(Box::new(Predicate::Truth(true)))),
                LogicalTest::IsFalse
            )
        );
        assert_eq!(
            pred("TRUE IS NOT TRUE AND FALSE"),
            Predicate::And(vec![
                Predicate::Test(Box::new(Predicate::Truth(true)), LogicalTest::IsNotTrue),
                Predicate::Truth(false)
            ])
        );
    }

    #[test]
    fn set_precedence() {
        let p = pred("a UNION b INTERSECT c EXCEPT (d UNION e) EXCEPT f EQUALS a");
        let v = |s: &str| SetExpr::Var(s.into());
        let de = SetExpr::Union(vec![v("d"), v("e")]);
        let diff = SetExpr::Difference(
            Box::new(v("c")),
            Box::new(SetExpr::Difference(Box::new(de), Box::new(v("f")))),
        );
        let want = SetExpr::Union(vec![v("a"), SetExpr::Intersection(vec![v("b"), diff])]);
        assert_eq!(
            p,
            Predicate::Compare(want, SetComparison::Identical, v("a"))
        );
    }

    #[test]
    fn parenthesised_sets_and_predicates() {
        let p = pred(r#"({"A"} EXCEPT x) OVERLAPS WITH GetTasksConflict({"A"},{"C"},ANY)"#);
        assert!(matches!(
            p,
            Predicate::Compare(
                SetExpr::Difference(..),
                SetComparison::OverlapsWith,
                SetExpr::BinaryConstruction(..)
            )
        ));
        let p = pred(r#"((x) IS PROPER SUBSET OF GetTasks())"#);
        assert_eq!(
            p,
            Predicate::Compare(
                SetExpr::Var("x".into()),
                SetComparison::ProperSubsetOf,
                SetExpr::AllTasks
            )
        );
        assert!(matches!(
            pred("x NOT EQUALS y"),
            Predicate::Compare(_, SetComparison::Different, _)
        ));
        assert!(matches!(
            pred("x IS SUBSET OF y"),
            Predicate::Compare(_, SetComparison::SubsetOf, _)
        ));
    }

    #[test]
    fn macros_and_quantifiers() {
        assert!(matches!(
            pred(r#"CanOccur({"a","b"}, ALL)"#),
            Predicate::UnaryMacro(U::CanOccur, _, Quantifier::All)
        ));
        assert!(matches!(
            pred(r#"Cooccur("a", {"b"}, ANY)"#),
            Predicate::BinaryMacroTaskSet(B::Cooccur, ..)
        ));
        assert!(matches!(
            pred(r#"Cooccur({"a"}, {"b"}, SOME)"#),
            Predicate::BinaryMacroSetSet(B::Cooccur, _, _, Quantifier::Some)
        ));
        assert!(matches!(
            pred(r#"Cooccur(x, y, EACH)"#),
            Predicate::BinaryMacroSetSet(B::Cooccur, _, _, Quantifier::Each)
        ));
        assert!(parse(r#"SELECT * FROM * WHERE CanOccur({"a"}, SOME);"#).is_err());
        assert!(parse(r#"SELECT * FROM * WHERE Cooccur("a", {"b"}, EACH);"#).is_err());
        assert!(parse(r#"SELECT * FROM * WHERE GetTasksConflict(x, y, SOME) EQUALS x;"#).is_err());
    }

    #[test]
    fn errors_carry_positions_and_expectations() {
        let e = parse("SELECT * FROM *\nWHERE CanOccur(\"a\" ;").unwrap_err();
        assert_eq!((e.line, e.col), (2, 20));
        assert!(e.expected.contains(&")".to_string()));
        let e = parse("SELECT * FROM * WHERE").unwrap_err();
        assert!(e.message.contains("end of input"));
        assert!(parse("SELECT * FROM *").is_err());
        assert!(parse("SELECT FROM *;").is_err());
        assert!(parse("SELECT * FROM *; extra").is_err());
        assert!(parse("x = {}; SELECT * FROM * WHERE x EQUALS {};").is_ok());
    }
}
