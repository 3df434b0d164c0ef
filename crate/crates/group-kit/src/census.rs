//! SimpleCensus: a binary merge tree over the group ID space.
//!
//! Tree nodes at height `k` own two consecutive merge slots. The leader of the
//! left subtree transmits `(gid, info)` in the first, the leader of the right
//! subtree in the second, and rank-`k` members listen. The rank-`k` device of
//! the left leader's group becomes the new leader if the left subtree had one,
//! otherwise the rank-`k` device of the right leader's group does.
//!
//! Slots are laid out in post order. Subtrees with no valid ID get no slots,
//! which keeps padded ID spaces cheap.

use std::collections::HashSet;

use radio_core::wire::{Reader, Truncated, Writer};
use radio_core::{
    run_async, Bytes, Ctx, Metrics, ModelKind, RunConfig, RunError, Signal, Slot,
    DEFAULT_MESSAGE_CAP,
};

use crate::{Group, IdSet, ProtocolError};

/// Information pooled along merge trees.
pub trait Info: Clone + Default + 'static {
    fn encode(&self, w: Writer) -> Writer;
    fn decode(r: &mut Reader<'_>) -> Result<Self, Truncated>;
    fn merge(&mut self, other: Self);
}

impl Info for () {
    fn encode(&self, w: Writer) -> Writer {
        w
    }
    fn decode(_: &mut Reader<'_>) -> Result<(), Truncated> {
        Ok(())
    }
    fn merge(&mut self, _: ()) {}
}

impl Info for IdSet {
    fn encode(&self, w: Writer) -> Writer {
        IdSet::encode(self, w)
    }
    fn decode(r: &mut Reader<'_>) -> Result<IdSet, Truncated> {
        IdSet::decode(r)
    }
    fn merge(&mut self, other: IdSet) {
        self.union_with(&other)
    }
}

pub fn encode_tagged<I: Info>(gid: u64, info: &I) -> Bytes {
    info.encode(Writer::new().var(gid)).finish()
}

pub fn decode_gid(m: &[u8]) -> Option<u64> {
    Reader::new(m).var().ok()
}

pub fn decode_tagged<I: Info>(m: &[u8]) -> Option<(u64, I)> {
    let mut r = Reader::new(m);
    let gid = r.var().ok()?;
    let info = I::decode(&mut r).ok()?;
    Some((gid, info))
}

/// `⌈log₂ n⌉`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(n: u128) -> u32 {
    if n <= 1 {
        0
    } else {
        128 - (n - 1).leading_zeros()
    }
}

/// One step of a device's root path: the merge slot pair at some height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    /// First of the two merge slots, relative to the start of the run.
    pub slot: Slot,
    /// The device's subtree is the left child of this node.
    pub left: bool,
}

/// Schedule of one SimpleCensus over `[n_hat]` of which only `[valid]` can occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScPlan {
    n_hat: u128,
    valid: u128,
    height: u32,
}

/// `f(1) = 0`, `f(s) = 2·f(⌈s/2⌉) + 2`, saturating.
fn full_slots(s: u128) -> Slot {
    let h = ceil_log2(s);
    if h < 64 {
        ((1u128 << (h + 1)) - 2) as Slot
    } else {
        Slot::MAX
    }
}

fn slots(s: u128, v: u128) -> Slot {
    if s <= 1 || v == 0 {
        return 0;
    }
    if v >= s {
        return full_slots(s);
    }
    let half = s.div_ceil(2);
    slots(half, v.min(half))
        .saturating_add(slots(half, v.saturating_sub(half)))
        .saturating_add(2)
}

impl ScPlan {
    pub fn new(n_hat: u128) -> Self {
        ScPlan::padded(n_hat, n_hat)
    }

    /// Tree shaped for `n_hat` IDs, scheduled only for IDs below `valid`.
    pub fn padded(n_hat: u128, valid: u128) -> Self {
        assert!(n_hat >= 1, "empty ID space");
        ScPlan {
            n_hat,
            valid: valid.min(n_hat),
            height: ceil_log2(n_hat),
        }
    }

    pub fn n_hat(&self) -> u128 {
        self.n_hat
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn slots(&self) -> Slot {
        slots(self.n_hat, self.valid)
    }

    /// Merge slots on the way from leaf `gid` to the root, indexed by height − 1.
    pub fn path(&self, gid: u64) -> Vec<Hop> {
        let gid = gid as u128;
        assert!(gid < self.valid, "group id {gid} outside [{}]", self.valid);
        let mut hops = vec![
            Hop {
                slot: 0,
                left: true
            };
            self.height as usize
        ];
        let (mut s, mut v, mut lo, mut off) = (self.n_hat, self.valid, 0u128, 0 as Slot);
        for k in (1..=self.height).rev() {
            let half = s.div_ceil(2);
            let (vl, vr) = (v.min(half), v.saturating_sub(half));
            let tl = slots(half, vl);
            let tr = slots(half, vr);
            let left = gid < lo + half;
            hops[k as usize - 1] = Hop {
                slot: off + tl + tr,
                left,
            };
            if left {
                (s, v) = (half, vl);
            } else {
                (s, v, lo, off) = (half, vr, lo + half, off + tl);
            }
        }
        hops
    }
}

/// A device's part in one SimpleCensus call.
#[derive(Debug, Clone)]
pub struct ScInput<I> {
    pub gid: u64,
    pub rank: u32,
    /// Group size. Ranks above the tree height wrap around, so a group smaller
    /// than the tree has its members play several heights; size 1 emulates all.
    pub size: u32,
    /// The pooled information, present at the master only.
    pub info: Option<I>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScOutcome<I> {
    pub leader: bool,
    /// Union of all masters' information, at the leader only.
    pub info: Option<I>,
}

impl<I> ScInput<I> {
    fn plays(&self, k: u32) -> bool {
        k % self.size.max(1) == self.rank
    }
}

/// Per-device SimpleCensus starting at absolute slot `base`.
pub async fn sc_device<I: Info>(
    ctx: &Ctx,
    plan: &ScPlan,
    base: Slot,
    me: ScInput<I>,
) -> ScOutcome<I> {
    let h = plan.height();
    let mut carry = if me.plays(0) {
        Some(me.info.clone().unwrap_or_default())
    } else {
        None
    };
    if h == 0 {
        return ScOutcome {
            leader: carry.is_some(),
            info: carry,
        };
    }
    if !(0..=h).any(|k| me.plays(k)) {
        return ScOutcome {
            leader: false,
            info: None,
        };
    }
    let hops = plan.path(me.gid);
    for k in 1..=h {
        let plays = me.plays(k);
        if carry.is_none() && !plays {
            continue;
        }
        let Hop { slot, left } = hops[k as usize - 1];
        let a = base + slot;
        let msg = carry.take().map(|i| encode_tagged(me.gid, &i));
        let s0 = match &msg {
            Some(m) if left => {
                ctx.transmit(a, m.clone()).await;
                Some(Signal::Message(m.clone()))
            }
            _ if plays => Some(ctx.listen(a).await),
            _ => None,
        };
        let s0_gid = s0
            .as_ref()
            .and_then(Signal::message)
            .and_then(|m| decode_gid(m));
        let lost = s0_gid.is_some_and(|g| g != me.gid);
        let s1 = match &msg {
            Some(m) if !left => {
                ctx.transmit(a + 1, m.clone()).await;
                Some(Signal::Message(m.clone()))
            }
            _ if plays && !lost => Some(ctx.listen(a + 1).await),
            _ => None,
        };
        if !plays || lost {
            continue;
        }
        let s1_msg = s1.as_ref().and_then(Signal::message);
        let leader = match s0_gid {
            Some(g) => g == me.gid,
            None => s1_msg.and_then(|m| decode_gid(m)) == Some(me.gid),
        };
        if !leader {
            continue;
        }
        let mut info = I::default();
        for m in [s0.as_ref().and_then(Signal::message), s1_msg]
            .into_iter()
            .flatten()
        {
            if let Some((_, i)) = decode_tagged::<I>(m) {
                info.merge(i);
            }
        }
        if k == h {
            return ScOutcome {
                leader: true,
                info: Some(info),
            };
        }
        carry = Some(info);
    }
    ScOutcome {
        leader: false,
        info: None,
    }
}

/// Message cap large enough for an [`IdSet`] over `[n]`.
pub fn census_message_cap(n: u64) -> usize {
    DEFAULT_MESSAGE_CAP.max((n / 8) as usize + 256)
}

/// Result of a stand-alone SimpleCensus run.
#[derive(Debug, Clone)]
pub struct ScReport<I> {
    pub leader: u32,
    pub leader_rank: u32,
    pub info: I,
    pub leaders: usize,
    pub metrics: Metrics,
}

/// Run SimpleCensus over the given centralized groups.
///
/// Every group needs more than `⌈log₂ n_hat⌉` members so that a rank-`h`
/// member exists.
pub fn simple_census<I: Info>(
    n_hat: u64,
    groups: &[Group<I>],
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<ScReport<I>, ProtocolError> {
    if n_hat == 0 {
        return Err(ProtocolError::PreconditionViolated(
            "empty group ID space".into(),
        ));
    }
    if groups.is_empty() {
        return Err(ProtocolError::NoActiveDevices);
    }
    let h = ceil_log2(n_hat as u128);
    let mut ids = HashSet::new();
    let mut devs = HashSet::new();
    for g in groups {
        if g.id >= n_hat {
            return Err(ProtocolError::PreconditionViolated(format!(
                "group id {} outside [{n_hat}]",
                g.id
            )));
        }
        if !ids.insert(g.id) {
            return Err(ProtocolError::PreconditionViolated(format!(
                "duplicate group id {}",
                g.id
            )));
        }
        if g.members.len() <= h as usize {
            return Err(ProtocolError::PreconditionViolated(format!(
                "group {} has {} members, needs more than {h}",
                g.id,
                g.members.len()
            )));
        }
        for &d in &g.members {
            if !devs.insert(d) {
                return Err(ProtocolError::PreconditionViolated(format!(
                    "device {d} is in two groups"
                )));
            }
        }
    }
    let plan = std::rc::Rc::new(ScPlan::new(n_hat as u128));
    let mut who: Vec<(u32, u32)> = Vec::new();
    let mut inputs: Vec<Option<ScInput<I>>> = Vec::new();
    for g in groups {
        for (r, &d) in g.members.iter().enumerate() {
            let info = (r == 0).then(|| g.info.clone());
            who.push((d, r as u32));
            inputs.push(Some(ScInput {
                gid: g.id,
                rank: r as u32,
                size: g.members.len() as u32,
                info,
            }));
        }
    }
    let run = run_async(inputs.len(), model, cfg, |ctx| {
        let input = inputs[ctx.index() as usize].take().unwrap();
        let plan = plan.clone();
        async move { sc_device(&ctx, &plan, 0, input).await }
    })
    .map_err(|e: RunError<_>| ProtocolError::Kernel(e.to_string()))?;
    let metrics = run.metrics().clone();
    let mut leaders = 0;
    let mut found = None;
    for (i, o) in run.outputs.into_iter().enumerate() {
        let o = o.expect("all devices finish");
        if o.leader {
            leaders += 1;
            found = Some((who[i], o.info.unwrap_or_default()));
        }
    }
    let ((leader, leader_rank), info) = found
        .ok_or_else(|| ProtocolError::Kernel("SimpleCensus finished without a leader".into()))?;
    Ok(ScReport {
        leader,
        leader_rank,
        info,
        leaders,
        metrics,
    })
}
