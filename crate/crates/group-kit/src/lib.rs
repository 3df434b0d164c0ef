//! Groups of devices that share energy costs, and SimpleCensus.
//!
//! A group is an ordered device list whose master (rank 0) holds the pooled
//! information of the whole group. SimpleCensus merges any number of such groups
//! into one leader that knows the union of all masters' information, while each
//! participating member spends at most three slots.

mod census;
mod group;
mod idset;

pub use census::{
    ceil_log2, census_message_cap, decode_gid, decode_tagged, encode_tagged, sc_device,
    simple_census, Hop, Info, ScInput, ScOutcome, ScPlan, ScReport,
};
pub use group::{merge_groups, Group, GroupView, OverlapError};
pub use idset::IdSet;

/// Errors shared by the protocol crates.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no active devices")]
    NoActiveDevices,
    #[error("kernel error: {0}")]
    Kernel(String),
}
