//! Convergence studies, timings and self-checks for `etdfem-core`.

pub mod config;
pub mod report;
pub mod run;
pub mod validate;

pub use config::{Overrides, RunConfig, SchemeSel, Task};
pub use etdfem_core::problems::ProblemId;
pub use etdfem_core::steppers::Scheme;
pub use report::{observed_order, rel_linf_error, BenchRow, ConvergenceReport, ConvergenceRow};
pub use run::{overshoot, run_bench, run_convergence, run_solve, SolveOutput};
pub use validate::{run_validate, Check};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] etdfem_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
