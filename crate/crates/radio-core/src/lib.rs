//! Lock-step slotted channel kernel.
//!
//! A run is a set of device programs sharing one single-hop channel. Each slot
//! a device transmits, listens or idles; [`arbitrate`] decides what everybody
//! hears under the chosen [`ModelKind`], and the kernel charges one unit of
//! energy per transmit or listen. The kernel is event driven: devices ask for
//! their next action at an absolute slot, so idle stretches cost nothing.

mod device;
mod kernel;
mod model;
pub mod wire;

pub use device::{run_async, AsyncDevice, Ctx, Join, LocalBoxFuture};
pub use kernel::{
    run, Behavior, EnergyLedger, Metrics, Run, RunConfig, RunError, Slot, SlotEntry, SlotRecord,
    Step, Transcript, DEFAULT_MESSAGE_CAP,
};
pub use model::{arbitrate, signal_for, Action, ModelKind, Role, Signal, UnknownModel};

pub use bytes::Bytes;
