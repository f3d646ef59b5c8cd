//! Place/transition nets, the token game, and workflow-system checks.

mod marking;
mod net;
pub mod pnml;

pub use marking::Marking;
pub use net::{NetBuilder, NetError, NetSystem, Transition, Workflow, WorkflowViolation};
