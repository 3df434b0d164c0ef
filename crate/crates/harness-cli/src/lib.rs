//! Experiment runner for the radio-network protocols.
//!
//! A [`Scenario`] names a protocol, a model and a population; [`run_scenario`]
//! executes its trials with seeds `seed, seed+1, …` and returns one
//! [`ResultRecord`] per trial in trial order, whatever the execution strategy.
//! Records are written as JSON Lines with a fixed key order and summarised by
//! [`aggregate`].

mod aggregate;
mod circuit;
mod presets;
mod record;
mod runner;
mod scenario;

pub use aggregate::{aggregate, nearest_rank, Quantiles, Summary};
pub use circuit::{run_circuit, CircuitScenario, InputSpec};
pub use presets::{preset, PRESETS};
pub use record::{read_jsonl, write_csv, write_jsonl, Outcome, ResultRecord, CSV_COLUMNS};
pub use runner::{run_scenario, run_trial, thread_cap, Execution, THREADS_ENV};
pub use scenario::{Population, Protocol, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid {field}: {msg}")]
    Config { field: &'static str, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl HarnessError {
    pub fn config(field: &'static str, msg: impl std::fmt::Display) -> HarnessError {
        HarnessError::Config {
            field,
            msg: msg.to_string(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config { .. } | HarnessError::Parse { .. } | HarnessError::EmptyInput => {
                2
            }
            HarnessError::Precondition(_) => 3,
            HarnessError::Run(_) | HarnessError::Io(_) => 1,
        }
    }
}
