//! `Test(i)` and `Exponential-Search(D)`.
//!
//! In `Test(i)` every device transmits with probability `2^(−d_i)` and the
//! rest listen. Silence means nobody transmitted, which all listeners read as
//! `i >= î`; any transmitter reads `i < î`. With receiver-side collision
//! detection listeners hear noise on a collision, so everybody agrees.

use radio_core::{run_async, Bytes, Ctx, Metrics, ModelKind, RunConfig, Signal, Slot};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::schedule::CheckpointSchedule;
use crate::RandError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `i >= î`: the channel was silent.
    AtLeast,
    /// `i < î`: somebody transmitted.
    Below,
}

pub fn check_model(model: ModelKind) -> Result<(), RandError> {
    if model.listener_detects_noise() {
        Ok(())
    } else {
        Err(RandError::ModelUnsupported(model))
    }
}

/// Verdict of a listener given what it heard.
pub fn listener_verdict(sig: &Signal) -> Verdict {
    match sig {
        Signal::Silence => Verdict::AtLeast,
        _ => Verdict::Below,
    }
}

fn transmit_prob(d: u64) -> f64 {
    2f64.powf(-(d as f64))
}

/// One device running `Test(i)` in `slot`, where `d = d_i`.
pub async fn probe_device(ctx: &Ctx, d: u64, slot: Slot) -> Verdict {
    let tx = ctx.rng().random_bool(transmit_prob(d));
    if tx {
        ctx.transmit(slot, Bytes::from_static(&[1])).await;
        Verdict::Below
    } else {
        listener_verdict(&ctx.listen(slot).await)
    }
}

/// Drives the doubling phase and then the binary search, one test per slot.
#[derive(Debug, Clone)]
pub struct SearchState {
    lo: u32,
    hi: Option<u32>,
    next: u32,
    used: Slot,
}

impl Default for SearchState {
    fn default() -> Self {
        SearchState::new()
    }
}

impl SearchState {
    pub fn new() -> SearchState {
        SearchState {
            lo: 1,
            hi: None,
            next: 1,
            used: 0,
        }
    }

    /// The index to test next, or `None` once the search is over.
    pub fn next_test(&self) -> Option<u32> {
        match self.hi {
            Some(hi) if self.lo >= hi => None,
            _ => Some(self.next),
        }
    }

    pub fn record(&mut self, v: Verdict) {
        let i = self.next;
        self.used += 1;
        match (self.hi, v) {
            (None, Verdict::AtLeast) => {
                self.hi = Some(i);
                self.lo = i / 2 + 1;
            }
            (None, Verdict::Below) => {
                self.lo = i + 1;
                self.next = i.checked_mul(2).expect("doubling overflow");
                return;
            }
            (Some(_), Verdict::AtLeast) => self.hi = Some(i),
            (Some(_), Verdict::Below) => self.lo = i + 1,
        }
        let hi = self.hi.unwrap();
        self.next = (self.lo + hi) / 2;
    }

    /// `ĩ`, once [`SearchState::next_test`] is `None`.
    pub fn result(&self) -> Option<u32> {
        self.next_test().is_none().then_some(self.lo)
    }

    pub fn slots_used(&self) -> Slot {
        self.used
    }
}

/// One device running `Exponential-Search(D)` from slot `base`; returns `ĩ`
/// and the number of slots used.
pub async fn exponential_search_device(
    ctx: &Ctx,
    sched: &CheckpointSchedule,
    base: Slot,
) -> (u32, Slot) {
    let mut s = SearchState::new();
    while let Some(i) = s.next_test() {
        let v = probe_device(ctx, sched.d(i), base + s.slots_used()).await;
        s.record(v);
    }
    (s.result().unwrap(), s.slots_used())
}

/// `Exponential-Search(D)` over `n` devices simulated through the transmitter
/// count alone, which is all the verdict depends on. Lets `n` go far beyond
/// what can be run device by device.
pub fn exponential_search_aggregate<R: Rng + ?Sized>(
    n: u64,
    sched: &CheckpointSchedule,
    rng: &mut R,
) -> (u32, Slot) {
    let mut s = SearchState::new();
    while let Some(i) = s.next_test() {
        let p = transmit_prob(sched.d(i));
        let tx = Binomial::new(n, p).expect("valid binomial").sample(rng);
        s.record(if tx == 0 {
            Verdict::AtLeast
        } else {
            Verdict::Below
        });
    }
    (s.result().unwrap(), s.slots_used())
}

fn kernel<O>(e: radio_core::RunError<O>) -> RandError {
    RandError::Kernel(e.to_string())
}

/// Run one `Test(i)` with transmit probability `2^(−d)` on `n` devices;
/// returns every device's verdict.
pub fn probe_test(
    n: usize,
    d: u64,
    model: ModelKind,
    run: &RunConfig,
) -> Result<Vec<Verdict>, RandError> {
    check_model(model)?;
    let res = run_async(n, model, run, |ctx| async move {
        probe_device(&ctx, d, 0).await
    })
    .map_err(kernel)?;
    Ok(res
        .outputs
        .into_iter()
        .map(|o| o.expect("device finished"))
        .collect())
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    /// `ĩ` per device.
    pub results: Vec<u32>,
    pub slots: Slot,
    pub metrics: Metrics,
}

impl SearchReport {
    /// The common `ĩ`, if all devices agree.
    pub fn agreed(&self) -> Option<u32> {
        let first = *self.results.first()?;
        self.results.iter().all(|&r| r == first).then_some(first)
    }
}

/// Run `Exponential-Search(D)` on `n` devices.
pub fn exponential_search(
    n: usize,
    sched: &CheckpointSchedule,
    model: ModelKind,
    run: &RunConfig,
) -> Result<SearchReport, RandError> {
    check_model(model)?;
    let sched = std::rc::Rc::new(sched.clone());
    let res = run_async(n, model, run, |ctx| {
        let sched = sched.clone();
        async move { exponential_search_device(&ctx, &sched, 0).await }
    })
    .map_err(kernel)?;
    let outs: Vec<(u32, Slot)> = res
        .outputs
        .into_iter()
        .map(|o| o.expect("device finished"))
        .collect();
    Ok(SearchReport {
        results: outs.iter().map(|o| o.0).collect(),
        slots: outs.iter().map(|o| o.1).max().unwrap_or(0),
        metrics: res.transcript.metrics,
    })
}
