//! `Trivial-Algorithm(d)`: count exactly when `n <= d`, otherwise report `n > d`.
//!
//! Every device draws a random leaf of a SimpleCensus tree over a space of
//! `d²·2^20` leaves and the tree sums the leaf counts, so the root learns how
//! many distinct leaves are occupied. For `n <= d` all leaves are distinct
//! except with probability below `2^−21`. The root announces the count; a
//! count above `d`, or a garbled announcement caused by colliding leaves,
//! means `n > d`. Energy is `O(log d)` and the schedule depends on `d` only.

use group_kit::{sc_device, Info, ScInput, ScPlan};
use radio_core::wire::{Reader, Truncated, Writer};
use radio_core::{run_async, Ctx, Metrics, ModelKind, RunConfig, Slot};
use rand::Rng;

/// Leaves per squared bound.
const SPACE_FACTOR: u128 = 1 << 20;

/// Number of occupied leaves below a tree node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Count(pub u64);

impl Info for Count {
    fn encode(&self, w: Writer) -> Writer {
        w.var(self.0)
    }
    fn decode(r: &mut Reader<'_>) -> Result<Count, Truncated> {
        r.var().map(Count)
    }
    fn merge(&mut self, other: Count) {
        self.0 = self.0.saturating_add(other.0);
    }
}

/// What a device concludes from `Trivial-Algorithm(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrivialDecision {
    Count(u64),
    Exceeds,
}

#[derive(Debug, Clone)]
pub struct TrivialPlan {
    pub d: u64,
    sc: ScPlan,
}

impl TrivialPlan {
    pub fn new(d: u64) -> TrivialPlan {
        let d = d.max(2) as u128;
        let space = d
            .saturating_mul(d)
            .saturating_mul(SPACE_FACTOR)
            .min(1 << 62)
            .next_power_of_two();
        TrivialPlan {
            d: d as u64,
            sc: ScPlan::new(space),
        }
    }

    pub fn leaves(&self) -> u128 {
        self.sc.n_hat()
    }

    /// Slot of the announcement; the plan uses `[0, announce]`.
    pub fn announce(&self) -> Slot {
        self.sc.slots()
    }

    pub fn slots(&self) -> Slot {
        self.announce() + 1
    }

    fn decide(&self, k: u64) -> TrivialDecision {
        if k > self.d {
            TrivialDecision::Exceeds
        } else {
            TrivialDecision::Count(k)
        }
    }
}

/// One device running `Trivial-Algorithm(d)` from slot `base`.
pub async fn trivial_device(ctx: &Ctx, plan: &TrivialPlan, base: Slot) -> TrivialDecision {
    let leaf = ctx.rng().random_range(0..plan.leaves() as u64);
    let me = ScInput {
        gid: leaf,
        rank: 0,
        size: 1,
        info: Some(Count(1)),
    };
    let out = sc_device(ctx, &plan.sc, base, me).await;
    let slot = base + plan.announce();
    match out.info.filter(|_| out.leader) {
        Some(Count(k)) => {
            ctx.transmit(slot, Writer::new().var(k).finish()).await;
            plan.decide(k)
        }
        None => match ctx
            .listen(slot)
            .await
            .message()
            .and_then(|m| Reader::new(m).var().ok())
        {
            Some(k) => plan.decide(k),
            None => TrivialDecision::Exceeds,
        },
    }
}

#[derive(Debug, Clone)]
pub struct TrivialReport {
    pub decisions: Vec<TrivialDecision>,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
}

impl TrivialReport {
    /// The common decision, if all devices agree.
    pub fn agreed(&self) -> Option<TrivialDecision> {
        let first = *self.decisions.first()?;
        self.decisions.iter().all(|&x| x == first).then_some(first)
    }
}

/// Run `Trivial-Algorithm(d)` on `n` devices.
pub fn trivial_algorithm(
    n: usize,
    d: u64,
    model: ModelKind,
    run: &RunConfig,
) -> Result<TrivialReport, crate::RandError> {
    let plan = std::rc::Rc::new(TrivialPlan::new(d));
    let res = run_async(n, model, run, |ctx| {
        let plan = plan.clone();
        async move { trivial_device(&ctx, &plan, 0).await }
    })
    .map_err(|e| crate::RandError::Kernel(e.to_string()))?;
    Ok(TrivialReport {
        decisions: res
            .outputs
            .into_iter()
            .map(|o| o.expect("device finished"))
            .collect(),
        metrics: res.transcript.metrics,
        scheduled_slots: plan.slots(),
    })
}
