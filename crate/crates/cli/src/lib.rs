//! Scenario files, the runner that evaluates them and the reproduction checks.

pub mod checks;
pub mod output;
pub mod runner;
pub mod scenario;
