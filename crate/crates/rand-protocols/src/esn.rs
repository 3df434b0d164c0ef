//! `Estimate-Network-Size(D)`.
//!
//! Setup: draw a label, run `Trivial-Algorithm(2^{d_1})`, and with
//! receiver-side collision detection run `Exponential-Search(D)` to skip
//! ahead to `k_0 = d_{ĩ−2}`. Then for `k = k_0, k_0+1, …` the label-`k`
//! devices run `Test-Network-Size(2^{k/2})`, and at every checkpoint `k = d_i`
//! the elected leaders announce their label, odd labels in the first slot and
//! even labels in the second. The first slot carrying exactly one message ends
//! the run with estimate `2^k̃`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use radio_core::wire::{Reader, Writer};
use radio_core::{run_async, Ctx, Metrics, ModelKind, RunConfig, RunError, Slot};

use crate::label::draw_label;
use crate::schedule::CheckpointSchedule;
use crate::search::exponential_search_device;
use crate::tns::{tns_device, TnsConfig, TnsPlan};
use crate::trivial::{trivial_device, TrivialDecision, TrivialPlan};
use crate::RandError;

/// Upper bound on the slots of one exponential search.
pub const SEARCH_SLOT_BOUND: Slot = 130;

#[derive(Debug, Clone, PartialEq)]
pub struct EsnConfig {
    pub schedule: CheckpointSchedule,
    pub tns: TnsConfig,
    /// Cap on the main loop; `64·d_{î+2}²` if unset.
    pub loop_slot_limit: Option<Slot>,
}

impl EsnConfig {
    pub fn new(schedule: CheckpointSchedule) -> EsnConfig {
        EsnConfig {
            schedule,
            tns: TnsConfig::default(),
            loop_slot_limit: None,
        }
    }

    /// Default loop cap for a network of `n` devices.
    pub fn default_loop_limit(&self, n: usize) -> Slot {
        let i = self.schedule.target_index((n.max(2) as f64).log2());
        let d = self.schedule.d(i + 2);
        d.saturating_mul(d).saturating_mul(64)
    }
}

/// Schedule shared by the devices of one run.
#[derive(Debug)]
pub struct EsnPlan {
    pub sched: CheckpointSchedule,
    pub tns_cfg: TnsConfig,
    pub model: ModelKind,
    pub trivial: TrivialPlan,
    tns: RefCell<HashMap<u64, Rc<TnsPlan>>>,
}

impl EsnPlan {
    pub fn new(cfg: &EsnConfig, model: ModelKind) -> Result<EsnPlan, RandError> {
        cfg.tns.validate()?;
        let d = 1u64
            .checked_shl(cfg.schedule.d1() as u32)
            .unwrap_or(u64::MAX);
        let plan = EsnPlan {
            sched: cfg.schedule.clone(),
            tns_cfg: cfg.tns,
            model,
            trivial: TrivialPlan::new(d),
            tns: RefCell::default(),
        };
        plan.tns(cfg.schedule.d1())?;
        Ok(plan)
    }

    /// Plan of `Test-Network-Size(2^{k/2})`.
    pub fn tns(&self, k: u64) -> Result<Rc<TnsPlan>, RandError> {
        if let Some(p) = self.tns.borrow().get(&k) {
            return Ok(p.clone());
        }
        let p = Rc::new(TnsPlan::new(
            2f64.powf(k as f64 / 2.0),
            self.model,
            self.tns_cfg,
        )?);
        self.tns.borrow_mut().insert(k, p.clone());
        Ok(p)
    }

    /// Slots of the setup before the loop, at most.
    pub fn setup_bound(&self) -> Slot {
        let search = if self.model.listener_detects_noise() {
            SEARCH_SLOT_BOUND
        } else {
            0
        };
        self.trivial.slots() + search
    }
}

/// How the run ended for a device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decided {
    Trivial,
    /// At checkpoint `d_index = k`.
    Checkpoint {
        index: u32,
        k: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EsnOutcome {
    pub estimate: Option<u64>,
    pub decided: Option<Decided>,
    pub label: Option<u64>,
    pub i_tilde: Option<u32>,
    /// Won its network-size test.
    pub tns_leader: bool,
}

fn estimate_for(k: u64) -> u64 {
    1u64.checked_shl(k as u32)
        .filter(|_| k < 64)
        .unwrap_or(u64::MAX)
}

/// One device running the whole algorithm; `listens` counts its listens in
/// checkpoint announcement slots.
pub async fn esn_device(ctx: &Ctx, plan: &EsnPlan, listens: &std::cell::Cell<u32>) -> EsnOutcome {
    let label = draw_label(&mut *ctx.rng(), plan.sched.d1());
    let mut out = EsnOutcome {
        estimate: None,
        decided: None,
        label,
        i_tilde: None,
        tns_leader: false,
    };
    if let TrivialDecision::Count(c) = trivial_device(ctx, &plan.trivial, 0).await {
        out.estimate = Some(c);
        out.decided = Some(Decided::Trivial);
        return out;
    }
    let mut t = plan.trivial.slots();
    let mut k = plan.sched.d1();
    if plan.model.listener_detects_noise() {
        let (i, used) = exponential_search_device(ctx, &plan.sched, t).await;
        t += used;
        out.i_tilde = Some(i);
        if i >= 3 {
            k = plan.sched.d(i - 2);
        }
    }
    let fb = plan.model.sender_feedback();
    let mut pending: Option<u64> = None;
    loop {
        let Ok(tp) = plan.tns(k) else { return out };
        if label == Some(k) {
            let r = tns_device(ctx, &tp, t).await;
            if r.leader {
                out.tns_leader = true;
                pending = Some(k);
            }
        }
        t += tp.slots();
        let Some(index) = plan.sched.index_of(k) else {
            if k >= plan.sched.last() {
                return out;
            }
            k += 1;
            continue;
        };
        let (a, b) = (t, t + 1);
        t += 2;
        let mine = pending.take();
        let announce = |l: u64| Writer::new().var(l).finish();
        let read = |s: &radio_core::Signal| s.message().and_then(|m| Reader::new(m).var().ok());
        let heard = match mine.filter(|l| l % 2 == 1) {
            Some(l) => {
                let s = ctx.transmit(a, announce(l)).await;
                (!fb || s.is_message()).then_some(l)
            }
            None => {
                listens.set(listens.get() + 1);
                read(&ctx.listen(a).await)
            }
        };
        let heard = match heard {
            Some(x) => Some(x),
            None => match mine.filter(|l| l % 2 == 0) {
                Some(l) => {
                    let s = ctx.transmit(b, announce(l)).await;
                    (!fb || s.is_message()).then_some(l)
                }
                None => {
                    listens.set(listens.get() + 1);
                    read(&ctx.listen(b).await)
                }
            },
        };
        if let Some(x) = heard {
            out.estimate = Some(estimate_for(x));
            out.decided = Some(Decided::Checkpoint { index, k });
            return out;
        }
        k += 1;
    }
}

/// Outcome of one run over all devices.
#[derive(Debug, Clone)]
pub struct CountResult {
    /// The estimate every device holds, if they all hold the same one.
    pub estimate: Option<u64>,
    pub agreed: bool,
    pub decided: Option<Decided>,
    /// `ĩ` from the exponential search (receiver-side detection only).
    pub i_tilde: Option<u32>,
    pub slot_limit_hit: bool,
    /// Mean over devices of listens in checkpoint announcement slots.
    pub mean_checkpoint_listens: f64,
    pub max_checkpoint_listens: u32,
    /// Distinct labels whose test elected a leader.
    pub tns_leader_labels: Vec<u64>,
    pub metrics: Metrics,
}

impl CountResult {
    /// All devices agree on an estimate within a factor 2 of `n`.
    pub fn success(&self, n: usize) -> bool {
        match (self.agreed, self.estimate) {
            (true, Some(e)) => {
                let (e, n) = (e as u128, n as u128);
                2 * e >= n && e <= 2 * n
            }
            _ => false,
        }
    }
}

/// Run `Estimate-Network-Size(D)` on `n` devices.
pub fn estimate_network_size(
    n: usize,
    model: ModelKind,
    cfg: &EsnConfig,
    run: &RunConfig,
) -> Result<CountResult, RandError> {
    if n == 0 {
        return Err(RandError::Protocol(
            group_kit::ProtocolError::NoActiveDevices,
        ));
    }
    if model == ModelKind::NoCD && n < 2 {
        return Err(RandError::Protocol(
            group_kit::ProtocolError::PreconditionViolated(
                "no-cd needs at least two devices".into(),
            ),
        ));
    }
    let plan = Rc::new(EsnPlan::new(cfg, model)?);
    let loop_limit = cfg
        .loop_slot_limit
        .unwrap_or_else(|| cfg.default_loop_limit(n));
    let mut run = run.clone();
    run.slot_limit = run
        .slot_limit
        .min(plan.setup_bound().saturating_add(loop_limit));
    let listens: Rc<Vec<std::cell::Cell<u32>>> =
        Rc::new((0..n).map(|_| Default::default()).collect());
    let res = run_async(n, model, &run, |ctx| {
        let (plan, listens) = (plan.clone(), listens.clone());
        async move { esn_device(&ctx, &plan, &listens[ctx.index() as usize]).await }
    });
    let (res, hit) = match res {
        Ok(r) => (r, false),
        Err(RunError::SlotLimitExceeded(r)) => (*r, true),
        Err(e) => return Err(RandError::Kernel(e.to_string())),
    };
    let outs: Vec<Option<EsnOutcome>> = res.outputs;
    let first = outs.iter().flatten().next();
    let estimate = first.and_then(|o| o.estimate);
    let agreed = !hit
        && outs.iter().all(|o| {
            o.as_ref()
                .is_some_and(|o| o.estimate.is_some() && o.estimate == estimate)
        });
    let mut tns_leader_labels: Vec<u64> = outs
        .iter()
        .flatten()
        .filter(|o| o.tns_leader)
        .filter_map(|o| o.label)
        .collect();
    tns_leader_labels.sort_unstable();
    tns_leader_labels.dedup();
    let counts: Vec<u32> = listens.iter().map(|c| c.get()).collect();
    Ok(CountResult {
        estimate: if agreed { estimate } else { None },
        agreed,
        decided: first.and_then(|o| o.decided),
        i_tilde: outs.iter().flatten().find_map(|o| o.i_tilde),
        slot_limit_hit: hit,
        mean_checkpoint_listens: counts.iter().map(|&c| c as f64).sum::<f64>() / n as f64,
        max_checkpoint_listens: counts.iter().copied().max().unwrap_or(0),
        tns_leader_labels,
        metrics: res.transcript.metrics,
    })
}
