//! Trading-strategy search as a computational problem.
//!
//! The crate is organised around the correspondence between searching
//! technical strategies on past prices and classic NP-complete problems:
//!
//! * [`series`]: price series, panels, direction bits and sliding contexts.
//! * [`strategy`]: fixed-lookback strategies, linear-time verification,
//!   exhaustive search and the context-bucketing optimum.
//! * [`knapsack`]: exact Knapsack solvers and the two-way mapping between
//!   budget-constrained multi-asset strategy search and Knapsack.
//! * [`sat`]: 3-CNF formulas encoded as one-cancels-other order groups on a
//!   simulated market, with a DPLL reference solver.
//! * [`momentum`]: formation/holding momentum backtests on a returns panel.
//! * [`bench`]: work-unit counted scaling measurements.

pub mod bench;
pub mod error;
pub mod knapsack;
pub mod momentum;
pub mod sat;
pub mod series;
pub mod strategy;

pub use error::{Error, Result};
