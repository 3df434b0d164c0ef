//! Collaborative circuit evaluation over the shared channel in Sender-CD
//! and No-CD, plus the circuits themselves.

mod circuit;
mod sim;

use radio_core::ModelKind;

pub use circuit::{eval_circuit, eval_gates, Circuit, Gate, GateFn, Src, DEFAULT_FAN_IN};
pub use sim::{
    simulate_circuit, simulate_circuit_with_tasks, CircuitReport, GateRole, InputPlan, Layout,
    SimConfig, Task,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("circuit simulation runs in sender-cd and no-cd, not {0}")]
    ModelUnsupported(ModelKind),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("kernel: {0}")]
    Kernel(String),
}
