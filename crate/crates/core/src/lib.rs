//! Simulation, compilation and benchmarking of constraint-preserving
//! alternating ansatze (QAOA with an XY mixer and the fused mixer-phaser
//! variant) on cardinality-constrained quadratic problems.

pub mod ansatz;
pub mod compiler;
pub mod dense;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod oracle;
pub mod problem;
pub mod seeding;
pub mod subspace_sim;

pub use ansatz::{AngleSchedule, AnsatzKind, CircuitPlan};
pub use error::{Error, Result};
pub use problem::ProblemInstance;
