use std::cmp::Reverse;
use std::collections::BinaryHeap;

use bytes::Bytes;
use serde::Serialize;

use crate::model::{signal_for, Action, ModelKind, Role, Signal};

pub type Slot = u64;

/// Per-device slot accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EnergyLedger {
    pub transmits: u64,
    pub listens: u64,
    pub idles: u64,
}

impl EnergyLedger {
    pub fn energy(&self) -> u64 {
        self.transmits + self.listens
    }
}

/// A device program driven by the kernel.
///
/// `step(None)` is called once at start; afterwards `step(Some(signal))` is
/// called right after each slot the device asked for. Each call either asks for
/// an action at a strictly later slot or finishes.
pub trait Behavior {
    type Output;
    fn step(&mut self, signal: Option<Signal>) -> Step<Self::Output>;
}

#[derive(Debug)]
pub enum Step<O> {
    Act { slot: Slot, action: Action },
    Done(O),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    /// Slots `>= slot_limit` are never executed.
    pub slot_limit: Slot,
    pub max_message_bytes: usize,
    pub record_transcript: bool,
}

pub const DEFAULT_MESSAGE_CAP: usize = 64 * 1024;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            slot_limit: Slot::MAX,
            max_message_bytes: DEFAULT_MESSAGE_CAP,
            record_transcript: false,
        }
    }
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotEntry {
    pub device: u32,
    pub action: Action,
    pub signal: Signal,
}

/// Only devices that asked for the slot appear; everyone else idled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotRecord {
    pub slot: Slot,
    pub entries: Vec<SlotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub slot_count: Slot,
    pub max_energy: u64,
    pub avg_energy: f64,
    pub max_message_bytes: usize,
    pub ledgers: Vec<EnergyLedger>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub slots: Vec<SlotRecord>,
    pub metrics: Metrics,
}

#[derive(Debug)]
pub struct Run<O> {
    pub transcript: Transcript,
    /// `None` for devices still live when the run stopped.
    pub outputs: Vec<Option<O>>,
}

impl<O> Run<O> {
    pub fn metrics(&self) -> &Metrics {
        &self.transcript.metrics
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError<O> {
    #[error("slot limit reached before all devices terminated")]
    SlotLimitExceeded(Box<Run<O>>),
    #[error("device {device} asked for slot {requested} at slot {now}")]
    PastSlot {
        device: u32,
        now: Slot,
        requested: Slot,
    },
    #[error("device {device} sent {bytes} bytes in slot {slot}, cap is {cap}")]
    MessageTooLarge {
        device: u32,
        slot: Slot,
        bytes: usize,
        cap: usize,
    },
}

impl<O> RunError<O> {
    pub fn partial(&self) -> Option<&Run<O>> {
        match self {
            RunError::SlotLimitExceeded(r) => Some(r),
            _ => None,
        }
    }
}

struct State {
    ledgers: Vec<EnergyLedger>,
    live_until: Vec<Option<Slot>>,
    last: Vec<Option<Slot>>,
    pending: Vec<Option<Action>>,
    heap: BinaryHeap<Reverse<(Slot, u32)>>,
    max_msg: usize,
}

impl State {
    fn schedule<O>(
        &mut self,
        dev: u32,
        slot: Slot,
        action: Action,
        now: Option<Slot>,
        cap: usize,
    ) -> Result<(), RunError<O>> {
        if let Some(t) = now {
            if slot <= t {
                return Err(RunError::PastSlot {
                    device: dev,
                    now: t,
                    requested: slot,
                });
            }
        }
        if let Action::Transmit(m) = &action {
            if m.len() > cap {
                return Err(RunError::MessageTooLarge {
                    device: dev,
                    slot,
                    bytes: m.len(),
                    cap,
                });
            }
            self.max_msg = self.max_msg.max(m.len());
        }
        self.pending[dev as usize] = Some(action);
        self.heap.push(Reverse((slot, dev)));
        Ok(())
    }
}

/// Drive `devices` in lock-step until all finish or the slot limit is hit.
pub fn run<B: Behavior>(
    mut devices: Vec<B>,
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<Run<B::Output>, RunError<B::Output>> {
    let n = devices.len();
    let mut st = State {
        ledgers: vec![EnergyLedger::default(); n],
        live_until: vec![None; n],
        last: vec![None; n],
        pending: vec![None; n],
        heap: BinaryHeap::with_capacity(n),
        max_msg: 0,
    };
    let mut outputs: Vec<Option<B::Output>> = (0..n).map(|_| None).collect();
    let mut slots = Vec::new();

    for (d, dev) in devices.iter_mut().enumerate() {
        match dev.step(None) {
            Step::Act { slot, action } => {
                st.schedule(d as u32, slot, action, None, cfg.max_message_bytes)?
            }
            Step::Done(o) => {
                outputs[d] = Some(o);
                st.live_until[d] = Some(0);
            }
        }
    }

    let mut batch: Vec<u32> = Vec::new();
    let mut last_slot: Option<Slot> = None;
    let mut limit_hit = false;
    while let Some(&Reverse((s, _))) = st.heap.peek() {
        if s >= cfg.slot_limit {
            limit_hit = true;
            break;
        }
        batch.clear();
        while let Some(&Reverse((t, d))) = st.heap.peek() {
            if t != s {
                break;
            }
            st.heap.pop();
            batch.push(d);
        }
        let mut transmitters = 0usize;
        let mut lone: Option<Bytes> = None;
        for &d in &batch {
            if let Some(Action::Transmit(m)) = &st.pending[d as usize] {
                transmitters += 1;
                lone = Some(m.clone());
            }
        }
        if transmitters != 1 {
            lone = None;
        }
        let mut record = cfg.record_transcript.then(|| SlotRecord {
            slot: s,
            entries: Vec::with_capacity(batch.len()),
        });
        for &d in &batch {
            let di = d as usize;
            let action = st.pending[di]
                .take()
                .expect("scheduled device has an action");
            let role = action.role();
            match role {
                Role::Sender => st.ledgers[di].transmits += 1,
                Role::Listener => st.ledgers[di].listens += 1,
                Role::Idle => {}
            }
            let signal = signal_for(role, transmitters, lone.as_ref(), model);
            if let Some(r) = record.as_mut() {
                r.entries.push(SlotEntry {
                    device: d,
                    action,
                    signal: signal.clone(),
                });
            }
            st.last[di] = Some(s);
            match devices[di].step(Some(signal)) {
                Step::Act { slot, action } => {
                    st.schedule(d, slot, action, Some(s), cfg.max_message_bytes)?
                }
                Step::Done(o) => {
                    outputs[di] = Some(o);
                    st.live_until[di] = Some(s + 1);
                }
            }
        }
        if let Some(r) = record {
            slots.push(r);
        }
        last_slot = Some(s);
    }

    let slot_count = if limit_hit {
        cfg.slot_limit
    } else {
        last_slot.map_or(0, |s| s + 1)
    };
    let mut ledgers = st.ledgers;
    for (d, l) in ledgers.iter_mut().enumerate() {
        let live = st.live_until[d].unwrap_or(slot_count);
        l.idles = live - l.transmits - l.listens;
    }
    let max_energy = ledgers.iter().map(EnergyLedger::energy).max().unwrap_or(0);
    let avg_energy = if n == 0 {
        0.0
    } else {
        ledgers.iter().map(EnergyLedger::energy).sum::<u64>() as f64 / n as f64
    };
    let run = Run {
        transcript: Transcript {
            slots,
            metrics: Metrics {
                slot_count,
                max_energy,
                avg_energy,
                max_message_bytes: st.max_msg,
                ledgers,
            },
        },
        outputs,
    };
    if limit_hit {
        Err(RunError::SlotLimitExceeded(Box::new(run)))
    } else {
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scripted device: a fixed list of (slot, action), output = signals seen.
    struct Script(Vec<(Slot, Action)>, usize, Vec<Signal>);

    impl Behavior for Script {
        type Output = Vec<Signal>;
        fn step(&mut self, signal: Option<Signal>) -> Step<Vec<Signal>> {
            if let Some(s) = signal {
                self.2.push(s);
            }
            match self.0.get(self.1) {
                Some((slot, a)) => {
                    self.1 += 1;
                    Step::Act {
                        slot: *slot,
                        action: a.clone(),
                    }
                }
                None => Step::Done(std::mem::take(&mut self.2)),
            }
        }
    }

    struct Forever;

    impl Behavior for Forever {
        type Output = ();
        fn step(&mut self, signal: Option<Signal>) -> Step<()> {
            let _ = signal;
            Step::Act {
                slot: 0,
                action: Action::Idle,
            }
        }
    }

    #[test]
    fn one_transmit_one_listen() {
        let m = Bytes::from_static(b"x");
        let devs = vec![
            Script(vec![(0, Action::Transmit(m.clone()))], 0, vec![]),
            Script(vec![(0, Action::Listen)], 0, vec![]),
        ];
        let run = run(devs, ModelKind::SenderCD, &RunConfig::default()).unwrap();
        assert_eq!(run.metrics().slot_count, 1);
        assert_eq!(
            run.metrics()
                .ledgers
                .iter()
                .map(|l| l.energy())
                .collect::<Vec<_>>(),
            vec![1, 1]
        );
        assert_eq!(run.outputs[1].as_ref().unwrap(), &vec![Signal::Message(m)]);
    }

    #[test]
    fn idler_hits_slot_limit_with_zero_energy() {
        // asks for slot 0, then the same slot again: first run is fine, the limit stops it
        let cfg = RunConfig {
            slot_limit: 10,
            ..RunConfig::default()
        };
        let devs = vec![Script(
            (0..20).map(|s| (s, Action::Idle)).collect(),
            0,
            vec![],
        )];
        match run(devs, ModelKind::NoCD, &cfg) {
            Err(RunError::SlotLimitExceeded(r)) => {
                assert_eq!(r.metrics().max_energy, 0);
                assert_eq!(r.metrics().slot_count, 10);
                assert_eq!(r.metrics().ledgers[0].idles, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn repeating_a_slot_is_rejected() {
        let err = run(vec![Forever], ModelKind::NoCD, &RunConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            RunError::PastSlot {
                device: 0,
                now: 0,
                requested: 0
            }
        ));
    }

    #[test]
    fn oversize_message_is_rejected() {
        let cfg = RunConfig {
            max_message_bytes: 4,
            ..RunConfig::default()
        };
        let devs = vec![Script(
            vec![(3, Action::Transmit(Bytes::from_static(b"12345")))],
            0,
            vec![],
        )];
        let err = run(devs, ModelKind::StrongCD, &cfg).unwrap_err();
        assert!(matches!(
            err,
            RunError::MessageTooLarge {
                bytes: 5,
                cap: 4,
                ..
            }
        ));
    }

    #[test]
    fn ledger_counts_sum_to_live_slots() {
        let m = Bytes::from_static(b"z");
        let devs = vec![
            Script(
                vec![
                    (2, Action::Listen),
                    (5, Action::Transmit(m.clone())),
                    (9, Action::Idle),
                ],
                0,
                vec![],
            ),
            Script(vec![(5, Action::Listen)], 0, vec![]),
        ];
        let run = run(devs, ModelKind::StrongCD, &RunConfig::default()).unwrap();
        let l = run.metrics().ledgers[0];
        assert_eq!((l.transmits, l.listens, l.idles), (1, 1, 8));
        let l = run.metrics().ledgers[1];
        assert_eq!((l.transmits, l.listens, l.idles), (0, 1, 5));
        assert_eq!(run.metrics().slot_count, 10);
    }
}
