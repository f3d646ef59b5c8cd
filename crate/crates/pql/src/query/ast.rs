//! Abstract syntax of PQL.
//!
//! Grouping parentheses are not represented; the printer re-inserts them
//! where the grammar requires, so `parse(print(q)) == q`.

use crate::relations::{BinaryPredicate, UnaryPredicate};

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub vars: Vec<Variable>,
    pub atts: Vec<Attribute>,
    pub locs: Vec<Location>,
    pub pred: Option<Predicate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub value: SetExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attribute {
    Universe,
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Universe,
    Path(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskExpr {
    /// `"label"`
    Exact(String),
    /// `~"label"`, resolved at the default threshold.
    DefSim(String),
    /// `"label"[θ]`
    Sim(String, f64),
}

impl TaskExpr {
    pub fn label(&self) -> &str {
        match self {
            TaskExpr::Exact(l) | TaskExpr::DefSim(l) | TaskExpr::Sim(l, _) => l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Any,
    Some,
    Each,
    All,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Any => "ANY",
            Quantifier::Some => "SOME",
            Quantifier::Each => "EACH",
            Quantifier::All => "ALL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Var(String),
    /// `GetTasks()`
    AllTasks,
    Literal(Vec<TaskExpr>),
    UnaryConstruction(UnaryPredicate, Box<SetExpr>),
    /// Quantifier is `Any` or `All`.
    BinaryConstruction(BinaryPredicate, Box<SetExpr>, Box<SetExpr>, Quantifier),
    Union(Vec<SetExpr>),
    Intersection(Vec<SetExpr>),
    /// Right-nested: `A EXCEPT B EXCEPT C` is `A \ (B \ C)`.
    Difference(Box<SetExpr>, Box<SetExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetComparison {
    Identical,
    Different,
    OverlapsWith,
    SubsetOf,
    ProperSubsetOf,
}

impl SetComparison {
    pub const ALL: [SetComparison; 5] = [
        SetComparison::Identical,
        SetComparison::Different,
        SetComparison::OverlapsWith,
        SetComparison::SubsetOf,
        SetComparison::ProperSubsetOf,
    ];

    pub fn keywords(self) -> &'static str {
        match self {
            SetComparison::Identical => "EQUALS",
            SetComparison::Different => "NOT EQUALS",
            SetComparison::OverlapsWith => "OVERLAPS WITH",
            SetComparison::SubsetOf => "IS SUBSET OF",
            SetComparison::ProperSubsetOf => "IS PROPER SUBSET OF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicalTest {
    IsTrue,
    IsNotTrue,
    IsFalse,
    IsNotFalse,
}

impl LogicalTest {
    pub const ALL: [LogicalTest; 4] = [
        LogicalTest::IsTrue,
        LogicalTest::IsNotTrue,
        LogicalTest::IsFalse,
        LogicalTest::IsNotFalse,
    ];

    pub fn keywords(self) -> &'static str {
        match self {
            LogicalTest::IsTrue => "IS TRUE",
            LogicalTest::IsNotTrue => "IS NOT TRUE",
            LogicalTest::IsFalse => "IS FALSE",
            LogicalTest::IsNotFalse => "IS NOT FALSE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Unary(UnaryPredicate, TaskExpr),
    Binary(BinaryPredicate, TaskExpr, TaskExpr),
    /// Quantifier is `Any` or `All`.
    UnaryMacro(UnaryPredicate, SetExpr, Quantifier),
    /// Quantifier is `Any` or `All`.
    BinaryMacroTaskSet(BinaryPredicate, TaskExpr, SetExpr, Quantifier),
    BinaryMacroSetSet(BinaryPredicate, SetExpr, SetExpr, Quantifier),
    In(TaskExpr, SetExpr),
    Compare(SetExpr, SetComparison, SetExpr),
    Truth(bool),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Test(Box<Predicate>, LogicalTest),
}
