//! Behavioural querying of process-model repositories.
//!
//! Workflow nets are stored in a [`repository`], checked for soundness,
//! indexed over the eight behavioural predicates and queried with PQL.

pub mod bench;
pub mod config;
pub mod fixtures;
pub mod generate;
pub mod index;
pub mod labels;
pub mod oracle;
pub mod parallel;
pub mod petri;
pub mod query;
pub mod relations;
pub mod repository;
pub mod soundness;
pub mod statespace;
pub mod unfolding;
