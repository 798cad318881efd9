//! Command-line front end: configuration, cost estimates and run
//! orchestration behind `mlb`.

pub mod config;
pub mod cost;
pub mod run;

pub use config::{load_config, parse_config, InitialGuess, RunConfig};
pub use cost::{cost_estimate, CostReport, MethodCost};
pub use run::{run, Command, Invocation};
