//! Deterministic leader election with `O(log log N)` energy and census with
//! `O(log² log N)` energy, both in `O(N)`-ish time, for models with sender
//! feedback.

mod census;
mod detle;

use std::collections::HashSet;
use std::rc::Rc;

use group_kit::{ceil_log2, census_message_cap, IdSet, ProtocolError};
use radio_core::{run_async, Metrics, ModelKind, RunConfig, Slot, SlotRecord};

pub use census::{census_device, dc_device, small_census_device, DcPlan, DcState};
pub use detle::{detle_device, detle_slots, le_device, LeOutcome, LePlan, Pairing};

/// Recursions run over the next power of two at or above `n`.
pub fn pow2_space(n: u64) -> u64 {
    n.max(1).next_power_of_two()
}

/// Interval width and interval count for a power-of-two ID space `n = 2^a`.
///
/// The width is `2^(2^(⌈log₂ a⌉−1))`, the smallest space of the form
/// `2^(2^k)` that is at least `√n`, and recursive calls run on the width. So
/// every call below the top is over a space `2^(2^k)` whose square-root
/// recursion is exact, and the top call only differs in its interval count.
pub fn split(n_hat: u64) -> (u64, u64) {
    debug_assert!(n_hat.is_power_of_two() && n_hat >= 4);
    let a = n_hat.trailing_zeros();
    let b = 1u32 << (ceil_log2(a as u128) - 1);
    (1 << b, 1 << (a - b))
}

/// `⌈log₂ log₂ n⌉` for `n >= 2`; 0 below.
pub fn loglog(n: u64) -> u32 {
    ceil_log2(ceil_log2(n as u128) as u128)
}

fn check_inputs(n: u64, active: &[u32], model: ModelKind) -> Result<(), ProtocolError> {
    if !model.sender_feedback() {
        return Err(ProtocolError::PreconditionViolated(format!(
            "deterministic protocols need sender feedback, {model} has none"
        )));
    }
    if active.is_empty() {
        return Err(ProtocolError::NoActiveDevices);
    }
    let mut seen = HashSet::new();
    for &id in active {
        if id as u64 >= n {
            return Err(ProtocolError::PreconditionViolated(format!(
                "device id {id} outside [{n}]"
            )));
        }
        if !seen.insert(id) {
            return Err(ProtocolError::PreconditionViolated(format!(
                "device id {id} appears twice"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LeReport {
    /// Device IDs that consider themselves leader.
    pub leaders: Vec<u32>,
    /// Per active device, in input order.
    pub outcomes: Vec<(u32, LeOutcome)>,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
    /// Empty unless the run config asked for a transcript.
    pub records: Vec<SlotRecord>,
}

impl LeReport {
    /// Devices that heard the elected leader's ID in the final slot (the leader included).
    pub fn informed(&self) -> usize {
        match self.leaders.as_slice() {
            [l] => self
                .outcomes
                .iter()
                .filter(|(_, o)| o.heard == Some(*l))
                .count(),
            _ => 0,
        }
    }
}

/// Elect one leader among `active` device IDs in `[n]`.
pub fn det_leader_election(
    n: u64,
    active: &[u32],
    preprocess: bool,
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<LeReport, ProtocolError> {
    check_inputs(n, active, model)?;
    let plan = Rc::new(LePlan::new(n, preprocess));
    let ids = active.to_vec();
    let run = run_async(ids.len(), model, cfg, |ctx| {
        let id = ids[ctx.index() as usize];
        le_device(ctx, plan.clone(), id)
    })
    .map_err(|e| ProtocolError::Kernel(e.to_string()))?;
    let metrics = run.metrics().clone();
    let records = run.transcript.slots;
    let outcomes: Vec<(u32, LeOutcome)> = ids
        .iter()
        .copied()
        .zip(run.outputs.into_iter().map(|o| o.expect("device finished")))
        .collect();
    let leaders = outcomes
        .iter()
        .filter(|(_, o)| o.leader)
        .map(|(id, _)| *id)
        .collect();
    Ok(LeReport {
        leaders,
        outcomes,
        metrics,
        scheduled_slots: plan.total_slots(),
        records,
    })
}

#[derive(Debug, Clone)]
pub struct CensusReport {
    /// The set announced in the final slot.
    pub census: Option<IdSet>,
    /// Devices that announced (exactly one in a correct run).
    pub announcers: Vec<u32>,
    pub metrics: Metrics,
    /// Empty unless the run config asked for a transcript.
    pub records: Vec<SlotRecord>,
}

/// Schedule length of [`det_census`] over `[n]`.
pub fn det_census_slots(n: u64) -> Slot {
    if n < 4 {
        group_kit::ScPlan::new(n as u128).slots() + 1
    } else {
        DcPlan::new(loglog(n)).slots(pow2_space(n), 0) + 1
    }
}

/// Let one device learn and announce the exact set of `active` IDs in `[n]`.
pub fn det_census(
    n: u64,
    active: &[u32],
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<CensusReport, ProtocolError> {
    check_inputs(n, active, model)?;
    let mut cfg = cfg.clone();
    cfg.max_message_bytes = cfg.max_message_bytes.max(census_message_cap(n));
    let plan = Rc::new(DcPlan::new(loglog(n)));
    let ids = active.to_vec();
    let run = run_async(ids.len(), model, &cfg, |ctx| {
        let id = ids[ctx.index() as usize];
        let plan = plan.clone();
        async move {
            if n < 4 {
                small_census_device(ctx, n, id).await
            } else {
                census_device(ctx, plan, pow2_space(n), id).await
            }
        }
    })
    .map_err(|e| ProtocolError::Kernel(e.to_string()))?;
    let metrics = run.metrics().clone();
    let records = run.transcript.slots;
    let mut announcers = Vec::new();
    let mut census = None;
    for (id, out) in ids.iter().zip(run.outputs) {
        if let Some(Some(set)) = out {
            announcers.push(*id);
            census = Some(set);
        }
    }
    Ok(CensusReport {
        census,
        announcers,
        metrics,
        records,
    })
}

/// Result of a stand-alone DetLE call.
#[derive(Debug, Clone)]
pub struct DetLeRound {
    /// Per input group ID, how the group left the call.
    pub pairings: Vec<(u64, Pairing)>,
    pub metrics: Metrics,
}

/// Run one DetLE call over `[n_hat]` with one representative per group ID in
/// `gids`; the representative's device number is its position in `gids`.
pub fn detle_round(
    n_hat: u64,
    gids: &[u64],
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<DetLeRound, ProtocolError> {
    if !model.sender_feedback() {
        return Err(ProtocolError::PreconditionViolated(format!(
            "DetLE needs sender feedback, {model} has none"
        )));
    }
    let distinct: HashSet<u64> = gids.iter().copied().collect();
    if distinct.len() < 2 || distinct.len() != gids.len() {
        return Err(ProtocolError::PreconditionViolated(
            "DetLE needs at least two distinct groups".into(),
        ));
    }
    if let Some(g) = gids.iter().find(|&&g| g >= n_hat) {
        return Err(ProtocolError::PreconditionViolated(format!(
            "group id {g} outside [{n_hat}]"
        )));
    }
    let space = pow2_space(n_hat);
    let ids = gids.to_vec();
    let run = run_async(ids.len(), model, cfg, |ctx| {
        let i = ctx.index();
        let g = ids[i as usize];
        async move { detle_device(&ctx, 0, space, g, g, i).await }
    })
    .map_err(|e| ProtocolError::Kernel(e.to_string()))?;
    let metrics = run.metrics().clone();
    let pairings = gids
        .iter()
        .copied()
        .zip(run.outputs.into_iter().map(|o| o.expect("device finished")))
        .collect();
    Ok(DetLeRound { pairings, metrics })
}

/// Result of a stand-alone DetCensus call.
#[derive(Debug, Clone)]
pub struct DetCensusRound {
    /// Members of the leader group in rank order.
    pub leader_group: Vec<u32>,
    /// Information held by the leader group's master.
    pub info: IdSet,
    pub metrics: Metrics,
}

/// Run one DetCensus call over `[n_hat]` on groups of equal size `2^l`, with
/// top size class `big_l`. Group members are device numbers and every
/// member starts out knowing its group's information.
pub fn detcensus_round(
    n_hat: u64,
    big_l: u32,
    groups: &[group_kit::Group<IdSet>],
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<DetCensusRound, ProtocolError> {
    if !model.sender_feedback() {
        return Err(ProtocolError::PreconditionViolated(format!(
            "DetCensus needs sender feedback, {model} has none"
        )));
    }
    let Some(first) = groups.first() else {
        return Err(ProtocolError::NoActiveDevices);
    };
    let size = first.members.len();
    if !size.is_power_of_two() || groups.iter().any(|g| g.members.len() != size) {
        return Err(ProtocolError::PreconditionViolated(
            "groups must share one power-of-two size".into(),
        ));
    }
    let l = size.trailing_zeros();
    if l > big_l {
        return Err(ProtocolError::PreconditionViolated(format!(
            "group size 2^{l} above 2^{big_l}"
        )));
    }
    let mut ids = HashSet::new();
    for g in groups {
        if g.id >= n_hat || !ids.insert(g.id) {
            return Err(ProtocolError::PreconditionViolated(format!(
                "bad or repeated group id {}",
                g.id
            )));
        }
    }
    let mut states = Vec::new();
    for g in groups {
        for (r, &d) in g.members.iter().enumerate() {
            states.push(Some((
                d,
                DcState {
                    gid: g.id,
                    rank: r as u32,
                    l,
                    master: g.members[0],
                    info: g.info.clone(),
                },
            )));
        }
    }
    let mut cfg = cfg.clone();
    cfg.max_message_bytes = cfg.max_message_bytes.max(census_message_cap(n_hat));
    let plan = Rc::new(DcPlan::new(big_l));
    let space = pow2_space(n_hat);
    let run = run_async(states.len(), model, &cfg, |ctx| {
        let (d, st) = states[ctx.index() as usize].take().unwrap();
        let plan = plan.clone();
        async move { (d, dc_device(&ctx, &plan, 0, space, st).await) }
    })
    .map_err(|e| ProtocolError::Kernel(e.to_string()))?;
    let metrics = run.metrics().clone();
    let mut members: Vec<(u32, u32)> = Vec::new();
    let mut info = IdSet::new();
    for (d, st) in run.outputs.into_iter().map(|o| o.expect("device finished")) {
        if let Some(st) = st {
            if st.rank == 0 {
                info = st.info.clone();
            }
            members.push((st.rank, d));
        }
    }
    members.sort();
    Ok(DetCensusRound {
        leader_group: members.into_iter().map(|(_, d)| d).collect(),
        info,
        metrics,
    })
}

/// Constants measured once on full occupancy in Sender-CD and frozen.
pub mod regression {
    /// `(log₂ N, max energy)` of leader election with preprocessing.
    pub const LE_ENERGY: [(u32, u64); 7] = [
        (8, 23),
        (10, 23),
        (12, 27),
        (14, 27),
        (16, 27),
        (18, 29),
        (20, 32),
    ];
    /// `(log₂ N, max energy)` of census.
    pub const CENSUS_ENERGY: [(u32, u64); 7] = [
        (8, 34),
        (10, 45),
        (12, 45),
        (14, 45),
        (16, 45),
        (18, 68),
        (20, 68),
    ];
    /// Leader election with preprocessing uses at most `K_T · N` slots.
    pub const K_T: u64 = 10;
    /// Leader election energy is at most `K_LE · (log₂ log₂ N + 1)`.
    pub const K_LE: u64 = 6;
    /// Census energy is at most `K_C · (log₂ log₂ N)² + K_C0`.
    pub const K_C: u64 = 3;
    pub const K_C0: u64 = 12;
}
