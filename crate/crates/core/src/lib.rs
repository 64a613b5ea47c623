//! Minimum link bandwidth and optimal ingress reshaping for token-bucket
//! flows with hard deadlines sharing one link.
//!
//! Five scheduler regimes are covered: EDF, static priority with and
//! without ingress reshaping, and FIFO with and without reshaping. A
//! discretized fluid simulator cross-checks every analytic bound.

// `!(x >= y)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay_bounds;
pub mod error;
pub mod eval_harness;
pub mod exec;
pub mod flow_model;
pub mod oracle;
pub mod packet_two_flow;
pub mod solvers;

pub use error::{Error, Result};
pub use exec::Execution;
pub use flow_model::{FlowProfile, FlowSet, ReshapingPlan, Scheduler, SolveResult};
