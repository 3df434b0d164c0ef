//! Leader election in phases of pairwise group merging.
//!
//! In phase `i` every surviving group has `2^i` members and one representative.
//! Representatives run [`detle_device`], a recursion over `⌈√N̂⌉` intervals of
//! the group ID space that pairs up some groups; then each representative tells
//! its group, in the announcement slot of the group ID, whether it merged or
//! terminated. A probe slot at the start of each phase detects a lone group.

use std::rc::Rc;

use group_kit::{sc_device, ScInput, ScPlan};
use radio_core::wire::{Reader, Writer};
use radio_core::{Bytes, Ctx, LocalBoxFuture, Slot};

use crate::{loglog, pow2_space, split};

/// Slots used by one DetLE call over the power-of-two space `[n_hat]`.
pub fn detle_slots(n_hat: u64) -> Slot {
    match n_hat {
        0 | 1 => 0,
        2 => 2,
        _ => {
            let (w, c) = split(n_hat);
            c.saturating_mul(1 + detle_slots(w))
                .saturating_add(1 + detle_slots(w))
        }
    }
}

/// How a representative's group left one DetLE call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Merged { partner: u64, partner_master: u32 },
    Terminated,
}

fn ping() -> Bytes {
    Bytes::from_static(&[0])
}

/// One representative in DetLE over the power-of-two space `[n_hat]`, local ID
/// `d`, from slot `base`.
///
/// `gid` and `master` describe the group to a partner and never change inside
/// the recursion. Needs sender feedback: a lone transmitter hears its own message.
pub fn detle_device(
    ctx: &Ctx,
    base: Slot,
    n_hat: u64,
    d: u64,
    gid: u64,
    master: u32,
) -> LocalBoxFuture<'_, Pairing> {
    Box::pin(async move {
        if n_hat <= 2 {
            let me = Writer::new().var(gid).var(master as u64).finish();
            let heard = if d == 0 {
                ctx.transmit(base, me).await;
                ctx.listen(base + 1).await
            } else {
                let h = ctx.listen(base).await;
                ctx.transmit(base + 1, me).await;
                h
            };
            let Some(m) = heard.message() else {
                return Pairing::Terminated;
            };
            let mut r = Reader::new(m);
            return match (r.var(), r.var()) {
                (Ok(partner), Ok(pm)) => Pairing::Merged {
                    partner,
                    partner_master: pm as u32,
                },
                _ => Pairing::Terminated,
            };
        }
        let (w, c) = split(n_hat);
        let t = detle_slots(w);
        let j = d / w;
        let check = base + j * (1 + t);
        if !ctx.transmit(check, ping()).await.is_message() {
            return detle_device(ctx, check + 1, w, d % w, gid, master).await;
        }
        let top = base + c * (1 + t);
        if ctx.transmit(top, ping()).await.is_message() {
            return Pairing::Terminated;
        }
        detle_device(ctx, top + 1, w, j, gid, master).await
    })
}

/// Fixed schedule of one leader election run.
#[derive(Debug, Clone)]
pub struct LePlan {
    /// Size of the device ID space.
    pub n: u64,
    /// Interval width of the preprocessing step, 0 if skipped.
    pub interval: u64,
    /// Group ID space of the main part.
    pub m: u64,
    /// Number of merge phases (0 means SimpleCensus right away).
    pub phases: u32,
    pub pre_slots: Slot,
    pub phase_slots: Slot,
    pub census_slots: Slot,
}

impl LePlan {
    pub fn new(n: u64, preprocess: bool) -> LePlan {
        let interval = if preprocess && n >= 4 {
            loglog(n) as u64
        } else {
            0
        };
        let (m, pre_slots) = if interval > 1 {
            let parts = n.div_ceil(interval);
            (parts, parts * ScPlan::new(interval as u128).slots())
        } else {
            (n, 0)
        };
        let phases = if m >= 4 { loglog(m) } else { 0 };
        let phase_slots = if phases > 0 {
            1 + detle_slots(pow2_space(m)) + m
        } else {
            0
        };
        let interval = if interval > 1 { interval } else { 0 };
        LePlan {
            n,
            interval,
            m,
            phases,
            pre_slots,
            phase_slots,
            census_slots: ScPlan::new(m as u128).slots(),
        }
    }

    fn phase_start(&self, i: u32) -> Slot {
        self.pre_slots + i as Slot * self.phase_slots
    }

    fn census_start(&self) -> Slot {
        self.phase_start(self.phases)
    }

    /// The slot where the leader announces itself to everybody.
    pub fn final_slot(&self) -> Slot {
        self.census_start() + self.census_slots
    }

    pub fn total_slots(&self) -> Slot {
        self.final_slot() + 1
    }
}

/// What one device learned from a leader election run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeOutcome {
    pub leader: bool,
    /// Device ID announced in the final slot.
    pub heard: Option<u32>,
    /// Number of phases in which this device acted as its group's representative.
    pub rep_phases: u32,
}

const ANN_LEADER: u8 = 0;
const ANN_MERGED: u8 = 1;
const ANN_TERMINATED: u8 = 2;

enum Fate {
    Active,
    Leader,
    Follower,
}

/// One device with ID `id` running the whole election.
pub async fn le_device(ctx: Ctx, plan: Rc<LePlan>, id: u32) -> LeOutcome {
    let mut rep_phases = 0;
    let mut gid = id as u64;
    let mut fate = Fate::Active;
    if plan.interval > 0 {
        let f = plan.interval;
        let part = id as u64 / f;
        let sc = ScPlan::new(f as u128);
        let base = part * sc.slots();
        let out = sc_device(
            &ctx,
            &sc,
            base,
            ScInput {
                gid: id as u64 % f,
                rank: 0,
                size: 1,
                info: Some(()),
            },
        )
        .await;
        if out.leader {
            gid = part;
        } else {
            fate = Fate::Follower;
        }
    }
    let (mut rank, mut size, mut master) = (0u32, 1u32, id);
    for i in 0..plan.phases {
        if !matches!(fate, Fate::Active) {
            break;
        }
        let start = plan.phase_start(i);
        let space = pow2_space(plan.m);
        let ann = start + 1 + detle_slots(space) + gid;
        let rep_rank = if i == 0 { 0 } else { (1u32 << (i - 1)) - 1 };
        let note = if rank == rep_rank {
            rep_phases += 1;
            let note = if ctx.transmit(start, ping()).await.is_message() {
                Writer::new().u8(ANN_LEADER)
            } else {
                match detle_device(&ctx, start + 1, space, gid, gid, master).await {
                    Pairing::Merged {
                        partner,
                        partner_master,
                    } => {
                        let first = gid < partner;
                        let new_master = if first { master } else { partner_master };
                        Writer::new()
                            .u8(ANN_MERGED)
                            .var(gid.min(partner))
                            .u8(!first as u8)
                            .var(new_master as u64)
                    }
                    Pairing::Terminated => Writer::new().u8(ANN_TERMINATED),
                }
            }
            .finish();
            if size > 1 {
                ctx.transmit(ann, note.clone()).await;
            }
            note
        } else {
            match ctx.listen(ann).await.message() {
                Some(m) => m.clone(),
                None => Writer::new().u8(ANN_TERMINATED).finish(),
            }
        };
        let mut r = Reader::new(&note);
        match r.u8() {
            Ok(ANN_LEADER) => {
                fate = if rank == 0 {
                    Fate::Leader
                } else {
                    Fate::Follower
                }
            }
            Ok(ANN_MERGED) => {
                let (Ok(new_id), Ok(shift), Ok(new_master)) = (r.var(), r.u8(), r.var()) else {
                    fate = Fate::Follower;
                    continue;
                };
                gid = new_id;
                if shift == 1 {
                    rank += size;
                }
                size *= 2;
                master = new_master as u32;
            }
            _ => fate = Fate::Follower,
        }
    }
    if matches!(fate, Fate::Active) {
        let sc = ScPlan::new(plan.m as u128);
        let out = sc_device(
            &ctx,
            &sc,
            plan.census_start(),
            ScInput {
                gid,
                rank,
                size,
                info: Some(()),
            },
        )
        .await;
        fate = if out.leader {
            Fate::Leader
        } else {
            Fate::Follower
        };
    }
    let fin = plan.final_slot();
    match fate {
        Fate::Leader => {
            ctx.transmit(fin, Writer::new().var(id as u64).finish())
                .await;
            LeOutcome {
                leader: true,
                heard: Some(id),
                rep_phases,
            }
        }
        _ => {
            let heard = ctx
                .listen(fin)
                .await
                .message()
                .and_then(|m| Reader::new(m).var().ok())
                .map(|v| v as u32);
            LeOutcome {
                leader: false,
                heard,
                rep_phases,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detle_budget() {
        assert_eq!(detle_slots(2), 2);
        assert_eq!(detle_slots(4), 2 * 3 + 3);
        assert_eq!(detle_slots(16), 4 * 10 + 10);
        assert_eq!(detle_slots(256), 16 * 51 + 51);
        // 8 splits into 2 intervals of width 4, 32 into 2 of width 16
        assert_eq!(detle_slots(8), 2 * 10 + 10);
        assert_eq!(detle_slots(32), 2 * 51 + 51);
    }

    #[test]
    fn plan_shapes() {
        let p = LePlan::new(3, false);
        assert_eq!((p.phases, p.m, p.interval), (0, 3, 0));
        assert_eq!(p.total_slots(), ScPlan::new(3).slots() + 1);
        let p = LePlan::new(1 << 16, true);
        assert_eq!(p.interval, 4);
        assert_eq!(p.m, 1 << 14);
        assert_eq!(p.phases, 4);
    }
}
