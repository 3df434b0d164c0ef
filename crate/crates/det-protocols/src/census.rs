//! DetCensus: recursive census over groups of power-of-two sizes.
//!
//! Every member of a group that comes out of a call knows the full information
//! set of that group, so any rank can act as a relay in the final phase.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use group_kit::{decode_tagged, encode_tagged, sc_device, IdSet, ScInput, ScPlan};
use radio_core::wire::{Reader, Writer};
use radio_core::{Bytes, Ctx, LocalBoxFuture, Slot};

use crate::split;

/// Budget table for DetCensus with top size class `big_l`.
#[derive(Debug)]
pub struct DcPlan {
    big_l: u32,
    memo: RefCell<HashMap<(u64, u32), Slot>>,
}

impl DcPlan {
    pub fn new(big_l: u32) -> DcPlan {
        DcPlan {
            big_l,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn big_l(&self) -> u32 {
        self.big_l
    }

    /// Slots used by one call over the power-of-two space `[n_hat]` with groups of size `2^l`.
    pub fn slots(&self, n_hat: u64, l: u32) -> Slot {
        if let Some(&t) = self.memo.borrow().get(&(n_hat, l)) {
            return t;
        }
        let big_l = self.big_l;
        let t = if l >= big_l {
            ScPlan::new(n_hat as u128).slots() + 1
        } else if n_hat <= 1 {
            1
        } else if n_hat == 2 {
            3
        } else {
            let (w, c) = split(n_hat);
            let mut t = 1 + c.saturating_mul(self.slots(w, l));
            for k in l..=big_l {
                t = t.saturating_add(self.slots(w, k));
            }
            t.saturating_add(2 * (big_l - l) as Slot)
        };
        self.memo.borrow_mut().insert((n_hat, l), t);
        t
    }
}

/// A device's view of its group during DetCensus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcState {
    pub gid: u64,
    pub rank: u32,
    /// The group has `2^l` members.
    pub l: u32,
    pub master: u32,
    /// Information of the whole group.
    pub info: IdSet,
}

fn ping() -> Bytes {
    Bytes::from_static(&[0])
}

fn with_master(master: u32, info: &IdSet) -> Bytes {
    info.encode(Writer::new().var(master as u64)).finish()
}

fn read_with_master(m: &[u8]) -> Option<(u32, IdSet)> {
    let mut r = Reader::new(m);
    let master = r.var().ok()? as u32;
    Some((master, IdSet::decode(&mut r).ok()?))
}

/// One device in DetCensus over the power-of-two space `[n_hat]` from slot `base`.
///
/// Returns the device's state in the leader group, or `None` once it halts.
pub fn dc_device<'a>(
    ctx: &'a Ctx,
    plan: &'a DcPlan,
    base: Slot,
    n_hat: u64,
    st: DcState,
) -> LocalBoxFuture<'a, Option<DcState>> {
    Box::pin(async move {
        let big_l = plan.big_l;
        let l = st.l;
        if l >= big_l {
            let sc = ScPlan::new(n_hat as u128);
            let info = (st.rank == 0).then(|| st.info.clone());
            let out = sc_device(
                ctx,
                &sc,
                base,
                ScInput {
                    gid: st.gid,
                    rank: st.rank,
                    size: 1 << l,
                    info,
                },
            )
            .await;
            let ann = base + sc.slots();
            if out.leader {
                let union = out.info.unwrap_or_default();
                ctx.transmit(ann, encode_tagged(st.gid, &union)).await;
                return Some(DcState { info: union, ..st });
            }
            let heard = ctx.listen(ann).await;
            return match heard.message().and_then(|m| decode_tagged::<IdSet>(m)) {
                Some((g, union)) if g == st.gid => Some(DcState { info: union, ..st }),
                _ => None,
            };
        }

        let probe = if st.rank == 0 {
            ctx.transmit(base, ping()).await
        } else {
            ctx.listen(base).await
        };
        if probe.is_message() {
            return Some(st);
        }
        if n_hat <= 2 {
            let mut parts: [Option<(u32, IdSet)>; 2] = [None, None];
            for side in 0..2u64 {
                let slot = base + 1 + side;
                if st.rank == 0 && st.gid == side {
                    ctx.transmit(slot, with_master(st.master, &st.info)).await;
                    parts[side as usize] = Some((st.master, st.info.clone()));
                } else {
                    parts[side as usize] = ctx
                        .listen(slot)
                        .await
                        .message()
                        .and_then(|m| read_with_master(m));
                }
            }
            let [Some((m0, i0)), Some((_, i1))] = parts else {
                return None;
            };
            let mut info = i0;
            info.union_with(&i1);
            let rank = if st.gid == 1 {
                st.rank + (1 << l)
            } else {
                st.rank
            };
            return Some(DcState {
                gid: st.gid,
                rank,
                l: l + 1,
                master: m0,
                info,
            });
        }

        let (w, c) = split(n_hat);
        let j = st.gid / w;
        let p1 = base + 1;
        let t1 = plan.slots(w, l);
        let local = DcState {
            gid: st.gid % w,
            ..st
        };
        let st1 = dc_device(ctx, plan, p1 + j * t1, w, local).await?;

        let kc = st1.l;
        let mut p2 = p1 + c * t1;
        for k in l..kc {
            p2 += plan.slots(w, k);
        }
        let st2 = dc_device(ctx, plan, p2, w, DcState { gid: j, ..st1 }).await?;

        let mut p3 = p1 + c * t1;
        for k in l..=big_l {
            p3 += plan.slots(w, k);
        }
        let pair = |k: u32| p3 + 2 * (big_l - 1 - k) as Slot;
        let mut top = kc == big_l;
        let mut carried: Option<IdSet> = None;
        let mut info = st2.info.clone();
        for k in (l..big_l).rev() {
            let (a, b) = (pair(k), pair(k) + 1);
            if !top {
                if k != kc {
                    continue;
                }
                if ctx.listen(a).await.is_message() {
                    if st2.rank == 0 {
                        ctx.transmit(b, encode_tagged(0, &st2.info)).await;
                    }
                    return None;
                }
                top = true;
                continue;
            }
            let rank = st2.rank;
            if rank == k {
                let u = if k + 1 == kc {
                    st2.info.clone()
                } else {
                    carried.take().unwrap_or_default()
                };
                ctx.transmit(a, encode_tagged(0, &u)).await;
                if k == l {
                    info.union_with(&u);
                }
            }
            let listen_a = (k == l || rank + 1 == k) && rank != k;
            let listen_b = k == l || rank + 1 == k;
            let mut got = IdSet::new();
            if listen_a {
                if let Some((_, u)) = ctx
                    .listen(a)
                    .await
                    .message()
                    .and_then(|m| decode_tagged::<IdSet>(m))
                {
                    got.union_with(&u);
                }
            }
            if listen_b {
                if let Some((_, u)) = ctx
                    .listen(b)
                    .await
                    .message()
                    .and_then(|m| decode_tagged::<IdSet>(m))
                {
                    got.union_with(&u);
                }
            }
            if k == l {
                info.union_with(&got);
            } else if rank + 1 == k {
                carried = Some(got);
            }
        }
        Some(DcState { info, ..st2 })
    })
}

/// One device running census over the power-of-two space `[n]` with `n >= 4`; the leader group's
/// master announces the census in the final slot and returns it.
pub async fn census_device(ctx: Ctx, plan: Rc<DcPlan>, n: u64, id: u32) -> Option<IdSet> {
    let st = DcState {
        gid: id as u64,
        rank: 0,
        l: 0,
        master: id,
        info: IdSet::singleton(id),
    };
    let fin = plan.slots(n, 0);
    let st = dc_device(&ctx, &plan, 0, n, st).await?;
    if st.rank != 0 {
        return None;
    }
    ctx.transmit(fin, encode_tagged(0, &st.info)).await;
    Some(st.info)
}

/// Census for `n < 4`: SimpleCensus with every device emulating its whole tree path.
pub async fn small_census_device(ctx: Ctx, n: u64, id: u32) -> Option<IdSet> {
    let sc = ScPlan::new(n as u128);
    let out = sc_device(
        &ctx,
        &sc,
        0,
        ScInput {
            gid: id as u64,
            rank: 0,
            size: 1,
            info: Some(IdSet::singleton(id)),
        },
    )
    .await;
    if !out.leader {
        return None;
    }
    let info = out.info.unwrap_or_default();
    ctx.transmit(sc.slots(), encode_tagged(0, &info)).await;
    Some(info)
}
