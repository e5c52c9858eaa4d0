//! Batch runs: configuration, reports, dumps and the commands behind the CLI.

pub mod commands;
pub mod config;
pub mod dump;
pub mod report;
pub mod suite;

pub use commands::{cmd_decompose, cmd_gasket, cmd_verify, DecomposeInputs, RunError, RunOutput};
pub use config::RunConfig;
pub use report::{CheckResult, Report, Status};

/// Shortest round-trip form, in exponent notation for small magnitudes.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}
