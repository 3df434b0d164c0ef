//! `DenseAlgo_i(N̂, j)` as a fixed schedule plus per-device programs.

use std::cell::RefCell;
use std::collections::HashMap;

use group_kit::{sc_device, Info, ScInput, ScPlan};
use radio_core::wire::{Reader, Writer};
use radio_core::{Bytes, Ctx, LocalBoxFuture, Slot};

use crate::ackermann::{a_capped, b_capped, CappedMagnitude};
use crate::roster::Roster;

/// What a surviving member knows about its group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DState {
    pub gid: u64,
    pub rank: u32,
    pub size: u32,
    pub roster: Roster,
}

/// Why a device stopped: its group `gid` was dropped with `size` members
/// (0 if the device never heard its group's announcement).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dropped {
    pub gid: u64,
    pub size: u32,
}

impl DState {
    pub fn singleton(id: u32) -> DState {
        DState {
            gid: id as u64,
            rank: 0,
            size: 1,
            roster: Roster::Set(group_kit::IdSet::singleton(id)),
        }
    }

    /// The state of device `id` in group `gid` with the given roster.
    pub fn adopt(id: u32, gid: u64, roster: Roster) -> Result<DState, Dropped> {
        let (rank, size) = roster.members().rank_and_len(id);
        let size = size as u32;
        match rank {
            Some(rank) => Ok(DState {
                gid,
                rank,
                size,
                roster,
            }),
            None => Err(Dropped { gid, size }),
        }
    }
}

fn encode(r: &Roster) -> Bytes {
    r.encode(Writer::new()).finish()
}

fn decode(m: &[u8]) -> Option<Roster> {
    Roster::decode(&mut Reader::new(m)).ok()
}

/// One recursive call inside `DenseAlgo_i`: its ID space, richness parameter and start offset.
#[derive(Debug, Clone, Copy)]
pub struct Call {
    pub n_hat: u64,
    pub j: CappedMagnitude,
    pub offset: Slot,
}

/// Memoized budgets of `DenseAlgo`.
#[derive(Debug)]
pub struct DensePlan {
    cap: u64,
    slots: RefCell<HashMap<(u32, u64, CappedMagnitude), Slot>>,
    b: RefCell<HashMap<(u32, CappedMagnitude), CappedMagnitude>>,
}

impl DensePlan {
    pub fn new(cap: u64) -> DensePlan {
        DensePlan {
            cap,
            slots: RefCell::default(),
            b: RefCell::default(),
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn b(&self, i: u32, j: CappedMagnitude) -> CappedMagnitude {
        if let Some(&v) = self.b.borrow().get(&(i, j)) {
            return v;
        }
        let v = b_capped(i, j);
        self.b.borrow_mut().insert((i, j), v);
        v
    }

    /// `N̂ <= 2^j`: one SimpleCensus and one output slot.
    pub fn short(&self, n_hat: u64, j: CappedMagnitude) -> bool {
        j.exp2().at_least(n_hat as u128)
    }

    /// Number of output slots, `⌈N̂ / b_i(j)⌉`.
    pub fn outputs(&self, i: u32, n_hat: u64, j: CappedMagnitude) -> u64 {
        self.b(i, j).div_ceil(n_hat)
    }

    /// Recursive calls of `DenseAlgo_i(N̂, j)` for `i > 0` outside the short case.
    pub fn calls(&self, i: u32, n_hat: u64, j: CappedMagnitude) -> Vec<Call> {
        let jv = j.value().expect("short case handles large j");
        let mut n = n_hat.div_ceil(1 << jv);
        let mut offset = merge_slots(n_hat, 1 << jv);
        let mut jr = j.pow(4);
        let mut out = Vec::with_capacity(jv as usize);
        for _ in 0..jv {
            out.push(Call {
                n_hat: n,
                j: jr,
                offset,
            });
            offset = offset.saturating_add(self.slots(i - 1, n, jr));
            n = self.b(i - 1, jr).div_ceil(n);
            jr = a_capped(i - 1, jr);
        }
        out
    }

    pub fn slots(&self, i: u32, n_hat: u64, j: CappedMagnitude) -> Slot {
        if let Some(&t) = self.slots.borrow().get(&(i, n_hat, j)) {
            return t;
        }
        let t = if self.short(n_hat, j) {
            merge_slots(n_hat, n_hat as u128)
        } else if i == 0 {
            merge_slots(n_hat, 1 << j.value().unwrap())
        } else {
            let calls = self.calls(i, n_hat, j);
            let last = calls.last().unwrap();
            last.offset
                .saturating_add(self.slots(i - 1, last.n_hat, last.j))
                .saturating_add(self.outputs(i, n_hat, j))
        };
        self.slots.borrow_mut().insert((i, n_hat, j), t);
        t
    }

    /// Offset of the first output slot.
    pub fn output_start(&self, i: u32, n_hat: u64, j: CappedMagnitude) -> Slot {
        self.slots(i, n_hat, j) - self.outputs(i, n_hat, j)
    }
}

fn part_plan(n_hat: u64, part: u128, p: u64) -> ScPlan {
    let valid = (n_hat as u128 - p as u128 * part).min(part);
    ScPlan::padded(part, valid)
}

/// Slots of [`merge_parts`]: one SimpleCensus per part, then one output slot per part.
pub fn merge_slots(n_hat: u64, part: u128) -> Slot {
    let parts = (n_hat as u128).div_ceil(part) as u64;
    let full = ScPlan::new(part).slots();
    full.saturating_mul(parts - 1)
        .saturating_add(part_plan(n_hat, part, parts - 1).slots())
        .saturating_add(parts)
}

/// Merge all groups of each part of `part` consecutive group IDs into one group
/// whose ID is the part index. The SimpleCensus leader announces the merged
/// roster in the part's output slot and every member listens. Groups with
/// fewer than `keep` members are then dropped.
pub async fn merge_parts(
    ctx: &Ctx,
    id: u32,
    base: Slot,
    n_hat: u64,
    part: u128,
    keep: Option<CappedMagnitude>,
    st: DState,
) -> Result<DState, Dropped> {
    let parts = (n_hat as u128).div_ceil(part) as u64;
    let p = (st.gid as u128 / part) as u64;
    let sc = part_plan(n_hat, part, p);
    let full = ScPlan::new(part).slots();
    let out_base = base + full * (parts - 1) + part_plan(n_hat, part, parts - 1).slots();
    let local = (st.gid as u128 % part) as u64;
    let info = (st.rank == 0).then(|| st.roster.clone());
    let out = sc_device(
        ctx,
        &sc,
        base + p * full,
        ScInput {
            gid: local,
            rank: st.rank,
            size: st.size,
            info,
        },
    )
    .await;
    let slot = out_base + p;
    let roster = match out.info.filter(|_| out.leader) {
        Some(r) => {
            ctx.transmit(slot, encode(&r)).await;
            r
        }
        None => ctx
            .listen(slot)
            .await
            .message()
            .and_then(|m| decode(m))
            .ok_or(Dropped { gid: p, size: 0 })?,
    };
    let st = DState::adopt(id, p, roster)?;
    match keep {
        Some(k) if k.at_least(st.size as u128 + 1) => Err(Dropped {
            gid: p,
            size: st.size,
        }),
        _ => Ok(st),
    }
}

/// Device `id` running `DenseAlgo_i(N̂, j)` from slot `base`.
pub fn dense_algo_device<'a>(
    ctx: &'a Ctx,
    plan: &'a DensePlan,
    i: u32,
    base: Slot,
    n_hat: u64,
    j: CappedMagnitude,
    id: u32,
    st: DState,
) -> LocalBoxFuture<'a, Result<DState, Dropped>> {
    Box::pin(async move {
        if plan.short(n_hat, j) {
            return merge_parts(ctx, id, base, n_hat, n_hat as u128, None, st).await;
        }
        let jv = j.value().unwrap() as u32;
        let st = merge_parts(ctx, id, base, n_hat, 1 << jv, Some(j.pow(5)), st).await?;
        if i == 0 {
            return Ok(st);
        }
        let calls = plan.calls(i, n_hat, j);
        // group ID at the start of each call, and after the last one
        let mut gids = vec![st.gid];
        for c in &calls {
            gids.push(plan.b(i - 1, c.j).div_floor(*gids.last().unwrap()));
        }
        let q = st.size / jv;
        let sub = (st.rank < jv * q).then(|| st.rank / q + 1);
        let mut held = None;
        if let Some(r) = sub {
            let input = if r == 1 {
                Some(DState {
                    gid: st.gid,
                    rank: st.rank,
                    size: q,
                    roster: Roster::Slice {
                        r: 1,
                        j: jv,
                        of: Box::new(st.roster.clone()),
                    },
                })
            } else {
                let prev = calls[r as usize - 2];
                let k = gids[r as usize - 1];
                let slot = base + prev.offset + plan.output_start(i - 1, prev.n_hat, prev.j) + k;
                ctx.listen(slot)
                    .await
                    .message()
                    .and_then(|m| decode(m))
                    .and_then(|h| DState::adopt(id, k, h.reslice(r)).ok())
            };
            if let Some(input) = input {
                let c = calls[r as usize - 1];
                let res =
                    dense_algo_device(ctx, plan, i - 1, base + c.offset, c.n_hat, c.j, id, input)
                        .await;
                if r == jv {
                    held = res.ok();
                }
            }
        }
        let kf = *gids.last().unwrap();
        let slot = base + plan.output_start(i, n_hat, j) + kf;
        match held {
            Some(h) if h.rank == 0 => {
                let roster = h.roster.unslice();
                ctx.transmit(slot, encode(&roster)).await;
                DState::adopt(id, kf, roster)
            }
            _ => {
                let heard = ctx.listen(slot).await;
                let roster = heard
                    .message()
                    .and_then(|m| decode(m))
                    .ok_or(Dropped { gid: kf, size: 0 })?;
                DState::adopt(id, kf, roster)
            }
        }
    })
}
