//! Shape-constrained symbolic regression.
//!
//! Genetic programming over expression trees whose conformance to prior
//! knowledge (positivity, monotonicity, convexity over sub-domains) is
//! certified with interval arithmetic. Single-objective variants reject
//! infeasible models outright; the multi-objective variants minimize one soft
//! penalty per constraint alongside the error.

pub mod constraints;
pub mod expr;
pub mod interval;
pub mod data;
pub mod problems;
pub mod serde_util;
pub mod evolution;
pub mod metrics;
pub mod harness;
