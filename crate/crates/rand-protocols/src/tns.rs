//! `Test-Network-Size(ñ)`: ID assignment followed by dense census over `[N]`.
//!
//! With sender feedback a device that transmits alone in slot `i` of `N`
//! takes ID `i`. Without it, slot pair `(2i, 2i+1)` is followed by an echo
//! exchange `t_1`, `t_2`: the `2i` transmitters speak in `t_1`, the `2i+1`
//! transmitters that heard a message answer in `t_2`, and a `2i` transmitter
//! hearing that answer takes ID `i`. That happens exactly when both slots had
//! one transmitter.

use std::rc::Rc;

use dense_protocols::{CensusView, DenseConfig, DenseSchedule};
use group_kit::{census_message_cap, IdSet};
use radio_core::{run_async, Bytes, Ctx, LocalBoxFuture, Metrics, ModelKind, RunConfig, Slot};
use rand::Rng;

use crate::RandError;

/// Smallest estimate the test accepts.
pub const MIN_N_TILDE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnsConfig {
    /// `N = ⌈c_id · log₂ ñ⌉` IDs.
    pub c_id: f64,
    /// Devices holding this many IDs or more sit the census out.
    pub beta: u32,
    /// Census density with sender feedback; squared without.
    pub c: f64,
}

impl Default for TnsConfig {
    fn default() -> Self {
        TnsConfig {
            c_id: 40.0,
            beta: 5,
            c: 0.325,
        }
    }
}

impl TnsConfig {
    pub fn density(&self, model: ModelKind) -> f64 {
        if model.sender_feedback() {
            self.c
        } else {
            self.c * self.c
        }
    }

    pub fn validate(&self) -> Result<(), RandError> {
        let bad = |s: String| Err(RandError::Config(s));
        if !(self.c_id.is_finite() && self.c_id > 0.0) {
            return bad(format!("c_id = {} must be positive", self.c_id));
        }
        if self.beta == 0 {
            return bad("beta must be at least 1".into());
        }
        if !(self.c > 0.0 && self.c < 0.8) {
            return bad(format!("c = {} outside (0, 0.8)", self.c));
        }
        Ok(())
    }
}

/// Fixed schedule of one test.
#[derive(Debug)]
pub struct TnsPlan {
    pub n_tilde: f64,
    pub model: ModelKind,
    pub cfg: TnsConfig,
    /// Size `N` of the ID space.
    pub n_ids: u64,
    pub assign_slots: Slot,
    pub census: DenseSchedule,
}

impl TnsPlan {
    pub fn new(n_tilde: f64, model: ModelKind, cfg: TnsConfig) -> Result<TnsPlan, RandError> {
        cfg.validate()?;
        if !(n_tilde >= MIN_N_TILDE) {
            return Err(RandError::NTooSmall(n_tilde));
        }
        let n_ids = (cfg.c_id * n_tilde.log2()).ceil() as u64;
        let assign_slots = if model.sender_feedback() {
            n_ids
        } else {
            4 * n_ids
        };
        let census = DenseSchedule::new(n_ids, DenseConfig::new(cfg.density(model)))?;
        Ok(TnsPlan {
            n_tilde,
            model,
            cfg,
            n_ids,
            assign_slots,
            census,
        })
    }

    /// `c·N`, the fewest IDs a leader may collect.
    pub fn threshold(&self) -> f64 {
        self.cfg.density(self.model) * self.n_ids as f64
    }

    pub fn slots(&self) -> Slot {
        self.assign_slots + self.census.census_slots()
    }

    pub fn message_cap(&self) -> usize {
        census_message_cap(self.n_ids)
    }
}

fn token() -> Bytes {
    Bytes::from_static(&[1])
}

/// One device's part in the ID assignment from slot `base`; returns its IDs.
pub async fn assign_device(ctx: &Ctx, plan: &TnsPlan, base: Slot) -> Vec<u32> {
    let p = 1.0 / plan.n_tilde;
    let mut ids = Vec::new();
    if plan.model.sender_feedback() {
        for i in 0..plan.n_ids {
            let tx = ctx.rng().random_bool(p);
            if tx && ctx.transmit(base + i, token()).await.is_message() {
                ids.push(i as u32);
            }
        }
        return ids;
    }
    for i in 0..plan.n_ids {
        let s = base + 4 * i;
        let a = ctx.rng().random_bool(p);
        let b = ctx.rng().random_bool(p);
        if a {
            ctx.transmit(s, token()).await;
        }
        if b {
            ctx.transmit(s + 1, token()).await;
        }
        if a {
            ctx.transmit(s + 2, token()).await;
            if ctx.listen(s + 3).await.is_message() {
                ids.push(i as u32);
            }
        } else if b && ctx.listen(s + 2).await.is_message() {
            ctx.transmit(s + 3, token()).await;
        }
    }
    ids
}

/// What one device takes away from a test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TnsOutcome {
    pub ids: Vec<u32>,
    /// Held `β` IDs or more and skipped the census.
    pub abstained: bool,
    pub leader: bool,
    /// Was elected but collected fewer than `c·N` IDs.
    pub resigned: bool,
    /// The census as heard by this device.
    pub census: Option<IdSet>,
}

/// One device running the whole test from slot `base`.
pub async fn tns_device(ctx: &Ctx, plan: &TnsPlan, base: Slot) -> TnsOutcome {
    let ids = assign_device(ctx, plan, base).await;
    let mut out = TnsOutcome {
        ids,
        abstained: false,
        leader: false,
        resigned: false,
        census: None,
    };
    if out.ids.is_empty() {
        return out;
    }
    if out.ids.len() >= plan.cfg.beta as usize {
        out.abstained = true;
        return out;
    }
    let start = base + plan.assign_slots;
    let views: Vec<CensusView> = if let [id] = out.ids[..] {
        vec![plan.census.census_at(ctx, start, id).await]
    } else {
        let roles = ctx.split(out.ids.len());
        let futs: Vec<LocalBoxFuture<'_, CensusView>> = roles
            .iter()
            .zip(&out.ids)
            .map(|(r, &id)| Box::pin(plan.census.census_at(r, start, id)) as _)
            .collect();
        ctx.join(&roles, futs).await
    };
    out.census = views.iter().find_map(|v| v.census.clone());
    if views.iter().any(|v| matches!(v.group, Ok((0, _)))) {
        let enough = out
            .census
            .as_ref()
            .is_some_and(|c| c.len() as f64 >= plan.threshold());
        out.leader = enough;
        out.resigned = !enough;
    }
    out
}

/// Result of a stand-alone ID assignment.
#[derive(Debug, Clone)]
pub struct AssignReport {
    pub n_ids: u64,
    /// Owning device per ID.
    pub owners: Vec<Option<u32>>,
    /// IDs claimed by more than one device (zero in a correct run).
    pub duplicates: usize,
    pub metrics: Metrics,
}

impl AssignReport {
    pub fn assigned(&self) -> usize {
        self.owners.iter().flatten().count()
    }
}

fn kernel<O>(e: radio_core::RunError<O>) -> RandError {
    RandError::Kernel(e.to_string())
}

/// Run the ID assignment alone with `n` participants.
pub fn assign_ids(
    n: usize,
    n_tilde: f64,
    model: ModelKind,
    cfg: TnsConfig,
    run: &RunConfig,
) -> Result<AssignReport, RandError> {
    let plan = Rc::new(TnsPlan::new(n_tilde, model, cfg)?);
    let res = run_async(n, model, run, |ctx| {
        let plan = plan.clone();
        async move { assign_device(&ctx, &plan, 0).await }
    })
    .map_err(kernel)?;
    let mut owners = vec![None; plan.n_ids as usize];
    let mut duplicates = 0;
    for (d, ids) in res.outputs.iter().enumerate() {
        for &i in ids.as_ref().expect("device finished") {
            if owners[i as usize].replace(d as u32).is_some() {
                duplicates += 1;
            }
        }
    }
    Ok(AssignReport {
        n_ids: plan.n_ids,
        owners,
        duplicates,
        metrics: res.metrics().clone(),
    })
}

/// Result of a stand-alone test.
#[derive(Debug, Clone)]
pub struct TnsReport {
    pub n_ids: u64,
    /// Devices that ended as leader.
    pub leaders: Vec<u32>,
    pub resigned: usize,
    pub abstained: usize,
    /// IDs handed out by the assignment.
    pub assigned: usize,
    /// Census held by the leader, if one was elected.
    pub census: Option<IdSet>,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
}

/// Run `Test-Network-Size(ñ)` with `n` participants.
pub fn test_network_size(
    n: usize,
    n_tilde: f64,
    model: ModelKind,
    cfg: TnsConfig,
    run: &RunConfig,
) -> Result<TnsReport, RandError> {
    let plan = Rc::new(TnsPlan::new(n_tilde, model, cfg)?);
    let mut run = run.clone();
    run.max_message_bytes = run.max_message_bytes.max(plan.message_cap());
    let res = run_async(n, model, &run, |ctx| {
        let plan = plan.clone();
        async move { tns_device(&ctx, &plan, 0).await }
    })
    .map_err(kernel)?;
    let outs: Vec<TnsOutcome> = res
        .outputs
        .into_iter()
        .map(|o| o.expect("device finished"))
        .collect();
    let leaders: Vec<u32> = (0..outs.len() as u32)
        .filter(|&d| outs[d as usize].leader)
        .collect();
    let census = leaders
        .first()
        .and_then(|&d| outs[d as usize].census.clone());
    Ok(TnsReport {
        n_ids: plan.n_ids,
        resigned: outs.iter().filter(|o| o.resigned).count(),
        abstained: outs.iter().filter(|o| o.abstained).count(),
        assigned: outs.iter().map(|o| o.ids.len()).sum(),
        leaders,
        census,
        metrics: res.transcript.metrics,
        scheduled_slots: plan.slots(),
    })
}
