//! Randomized certification of the divergence inequalities.
//!
//! [`ensemble`] draws reproducible inputs, [`checks`] turns each inequality into a
//! margin (non-negative when it holds), and [`suite`] runs checks over parameter grids
//! and aggregates the margins into [`report::CheckReport`]s.

pub mod checks;
pub mod ensemble;
pub mod report;
pub mod suite;

pub use report::CheckReport;
pub use suite::{run_suite, Check, SuiteConfig, SuiteReport};
