//! Randomized approximate counting and leader election in all four models.
//!
//! [`estimate_network_size`] combines labels, [`trivial_device`] for small
//! networks, [`exponential_search_device`] when listeners detect collisions,
//! and one [`test_network_size`] per label, which is ID assignment followed by
//! dense census. The checkpoint schedule sets the time/energy tradeoff.

mod esn;
mod label;
mod schedule;
mod search;
mod tns;
mod trivial;

use radio_core::ModelKind;

pub use esn::{
    esn_device, estimate_network_size, CountResult, Decided, EsnConfig, EsnOutcome, EsnPlan,
    SEARCH_SLOT_BOUND,
};
pub use label::{draw_label, label_for, label_mass};
pub use schedule::{make_schedule, CheckpointSchedule, ScheduleKind, MIN_D1};
pub use search::{
    check_model, exponential_search, exponential_search_aggregate, exponential_search_device,
    listener_verdict, probe_device, probe_test, SearchReport, SearchState, Verdict,
};
pub use tns::{
    assign_device, assign_ids, test_network_size, tns_device, AssignReport, TnsConfig, TnsOutcome,
    TnsPlan, TnsReport, MIN_N_TILDE,
};
pub use trivial::{
    trivial_algorithm, trivial_device, Count, TrivialDecision, TrivialPlan, TrivialReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RandError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("{0} cannot tell silence from a collision")]
    ModelUnsupported(ModelKind),
    #[error("estimate {0} is below 100")]
    NTooSmall(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] group_kit::ProtocolError),
    #[error("kernel error: {0}")]
    Kernel(String),
}

/// `Pr[Binom(n, 1/ñ) = 1]`.
pub fn binom_one(n: u64, n_tilde: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = 1.0 / n_tilde;
    n as f64 * p * ((n - 1) as f64 * (-p).ln_1p()).exp()
}
