//! Leader election and census with inverse-Ackermann energy when at least a
//! constant fraction `c` of the ID space is active.
//!
//! A preprocessing step merges each part of `⌈2^(8/c)⌉` IDs into one group,
//! with every device emulating the whole SimpleCensus path, and drops groups
//! smaller than `j = ⌈2^(4/c)⌉`. Then `DenseAlgo_i` with the least `i` for
//! which `b_i(j)` covers the remaining ID space leaves a single group whose
//! master is the leader. Every protocol here works in all four models.

mod ackermann;
mod algo;
mod roster;

use std::collections::HashSet;
use std::rc::Rc;

use group_kit::{census_message_cap, Group, IdSet, ProtocolError};
use radio_core::{run_async, Ctx, Metrics, ModelKind, RunConfig, Slot};

pub use ackermann::{a_func, b_func, min_depth, CappedMagnitude, DEFAULT_CAP};
pub use algo::{dense_algo_device, merge_parts, merge_slots, Call, DState, DensePlan, Dropped};
pub use roster::Roster;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DenseError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("leader group has {size} members but {parts} parts need a collector")]
    LeaderGroupTooSmall { size: u32, parts: u64 },
    #[error("{n} active devices are fewer than c·N = {c}·{big_n}")]
    DensityViolated { n: usize, big_n: u64, c: f64 },
}

/// Whether [`dense_algo`] checks the input specification of `DenseAlgo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `j > 32`, every group empty or `j`-rich, `j`-density at least `1/log₂ j`.
    Guarantee,
    /// Any `j >= 2` and any layout, so that small instances can exercise recursion depth.
    Relaxed,
}

/// Parameters of dense leader election and census.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseConfig {
    /// Density: at least `c·N` devices are active.
    pub c: f64,
    /// IDs per census collection part; `⌈4/c⌉` if unset.
    pub census_part: Option<u64>,
    pub cap: u64,
}

impl DenseConfig {
    pub fn new(c: f64) -> DenseConfig {
        DenseConfig {
            c,
            census_part: None,
            cap: DEFAULT_CAP,
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.c > 0.0 && self.c < 0.8) {
            return Err(ProtocolError::PreconditionViolated(format!(
                "density c = {} outside (0, 0.8)",
                self.c
            )));
        }
        if 8.0 / self.c > 120.0 {
            return Err(ProtocolError::PreconditionViolated(format!(
                "density c = {} needs parts of 2^{:.0} IDs, more than can be scheduled",
                self.c,
                8.0 / self.c
            )));
        }
        if self.census_part == Some(0) {
            return Err(ProtocolError::PreconditionViolated(
                "census part size 0".into(),
            ));
        }
        Ok(())
    }

    /// Preprocessing part size `⌈2^(8/c)⌉`.
    pub fn pre_part(&self) -> u128 {
        2f64.powf(8.0 / self.c).ceil() as u128
    }

    /// Richness threshold `⌈2^(4/c)⌉` after preprocessing.
    pub fn j(&self) -> u64 {
        2f64.powf(4.0 / self.c).ceil() as u64
    }

    pub fn census_part(&self) -> u64 {
        self.census_part.unwrap_or((4.0 / self.c).ceil() as u64)
    }
}

/// `Err(DensityViolated)` unless `n >= c·N`; devices cannot check this themselves.
pub fn check_density(big_n: u64, n: usize, c: f64) -> Result<(), DenseError> {
    if (n as f64) < c * big_n as f64 {
        return Err(DenseError::DensityViolated { n, big_n, c });
    }
    Ok(())
}

fn check_ids(n: u64, active: &[u32]) -> Result<(), ProtocolError> {
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

fn kernel(e: impl std::fmt::Display) -> ProtocolError {
    ProtocolError::Kernel(e.to_string())
}

/// Schedule of one dense election or census run.
#[derive(Debug)]
pub struct DenseSchedule {
    pub n: u64,
    pub cfg: DenseConfig,
    /// Group ID space after preprocessing.
    pub m: u64,
    pub j: CappedMagnitude,
    pub depth: u32,
    pub pre_slots: Slot,
    pub algo_slots: Slot,
    plan: DensePlan,
}

impl DenseSchedule {
    pub fn new(n: u64, cfg: DenseConfig) -> Result<DenseSchedule, ProtocolError> {
        cfg.validate()?;
        let part = cfg.pre_part();
        let m = (n as u128).div_ceil(part) as u64;
        let j = CappedMagnitude::new(cfg.j() as u128, cfg.cap);
        let depth = min_depth(m as u128, cfg.j(), cfg.cap);
        let plan = DensePlan::new(cfg.cap);
        let pre_slots = merge_slots(n, part);
        let algo_slots = plan.slots(depth, m, j);
        Ok(DenseSchedule {
            n,
            cfg,
            m,
            j,
            depth,
            pre_slots,
            algo_slots,
            plan,
        })
    }

    /// First slot after `DenseAlgo`.
    pub fn algo_end(&self) -> Slot {
        self.pre_slots + self.algo_slots
    }

    /// Preprocessing and `DenseAlgo` for device `id`; `Ok` for members of the final group.
    pub async fn elect(&self, ctx: &Ctx, id: u32) -> Result<DState, Dropped> {
        self.elect_at(ctx, 0, id).await
    }

    /// [`DenseSchedule::elect`] shifted to start at slot `base`.
    ///
    /// When the whole space is a single preprocessing part there is nothing
    /// left to merge, so the lone group is kept whatever its size.
    pub async fn elect_at(&self, ctx: &Ctx, base: Slot, id: u32) -> Result<DState, Dropped> {
        let st = DState::singleton(id);
        let keep = (self.m > 1).then_some(self.j);
        let st = merge_parts(ctx, id, base, self.n, self.cfg.pre_part(), keep, st).await?;
        dense_algo_device(
            ctx,
            &self.plan,
            self.depth,
            base + self.pre_slots,
            self.m,
            self.j,
            id,
            st,
        )
        .await
    }

    fn census_parts(&self) -> u64 {
        self.n.div_ceil(self.cfg.census_part())
    }

    /// Slots of [`DenseSchedule::census_at`].
    pub fn census_slots(&self) -> Slot {
        self.algo_end() + self.n + self.census_parts()
    }

    /// Election, collection and relay for device `id` from slot `base`.
    ///
    /// After the election, member `s_p` of the final group collects part `p` of
    /// `⌈4/c⌉` IDs while each active device transmits once in its own slot; then
    /// the collections are relayed `s_0 → s_1 → …` and everybody hears the last one.
    pub async fn census_at(&self, ctx: &Ctx, base: Slot, id: u32) -> CensusView {
        let part = self.cfg.census_part();
        let parts = self.census_parts();
        let collect = base + self.algo_end();
        let relay = collect + self.n;
        let last = relay + parts - 1;
        let st = self.elect_at(ctx, base, id).await;
        let group = st.as_ref().map(|s| (s.rank, s.size)).map_err(|d| *d);
        let rank = st
            .as_ref()
            .ok()
            .map(|s| s.rank as u64)
            .filter(|&r| r < parts);
        let own = id as u64 / part;
        let beep = || ctx.transmit(collect + id as u64, radio_core::Bytes::from_static(&[1]));
        let Some(p) = rank else {
            beep().await;
            let census = ctx.listen(last).await.message().and_then(|m| decode_set(m));
            return CensusView { group, census };
        };
        if own < p {
            beep().await;
        }
        let mut set = IdSet::new();
        for x in p * part..((p + 1) * part).min(self.n) {
            if x == id as u64 {
                set.insert(id);
            } else if ctx.listen(collect + x).await.is_message() {
                set.insert(x as u32);
            }
        }
        if own > p {
            beep().await;
        }
        if p > 0 {
            match ctx
                .listen(relay + p - 1)
                .await
                .message()
                .and_then(|m| decode_set(m))
            {
                Some(prev) => set.union_with(&prev),
                None => {
                    return CensusView {
                        group,
                        census: None,
                    }
                }
            }
        }
        ctx.transmit(relay + p, encode_set(&set)).await;
        if p + 1 == parts {
            return CensusView {
                group,
                census: Some(set),
            };
        }
        let census = ctx.listen(last).await.message().and_then(|m| decode_set(m));
        CensusView { group, census }
    }
}

/// One device's view at the end of a dense census.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusView {
    /// `(rank, size)` in the final group, or why the device was dropped.
    pub group: Result<(u32, u32), Dropped>,
    /// The set heard in the last relay slot.
    pub census: Option<IdSet>,
}

/// What one device ends up with after a dense election.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseOutcome {
    pub leader: bool,
    /// Device ID announced in the final slot.
    pub heard: Option<u32>,
    /// `(rank, size)` in the final group, or why the device was dropped.
    pub group: Result<(u32, u32), Dropped>,
}

#[derive(Debug, Clone)]
pub struct DenseLeReport {
    pub leaders: Vec<u32>,
    pub outcomes: Vec<(u32, DenseOutcome)>,
    pub depth: u32,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
}

impl DenseLeReport {
    /// Devices that heard the elected leader's ID (the leader included).
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

    /// Active devices outside the final group.
    pub fn dropped(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|(_, o)| o.group.is_err())
            .count()
    }
}

/// Elect one leader among `active` IDs in `[n]`; meant for `|active| >= c·n`.
pub fn dense_leader_election(
    n: u64,
    active: &[u32],
    dense: &DenseConfig,
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<DenseLeReport, ProtocolError> {
    check_ids(n, active)?;
    let sched = Rc::new(DenseSchedule::new(n, *dense)?);
    let fin = sched.algo_end();
    let mut cfg = cfg.clone();
    cfg.max_message_bytes = cfg.max_message_bytes.max(census_message_cap(n));
    let ids = active.to_vec();
    let run = run_async(ids.len(), model, &cfg, |ctx| {
        let id = ids[ctx.index() as usize];
        let sched = sched.clone();
        async move {
            let st = sched.elect(&ctx, id).await;
            let group = st.map(|s| (s.rank, s.size));
            if group.is_ok_and(|(rank, _)| rank == 0) {
                ctx.transmit(fin, radio_core::wire::Writer::new().var(id as u64).finish())
                    .await;
                return DenseOutcome {
                    leader: true,
                    heard: Some(id),
                    group,
                };
            }
            let heard = ctx.listen(fin).await;
            let heard = heard
                .message()
                .and_then(|m| radio_core::wire::Reader::new(m).var().ok())
                .map(|v| v as u32);
            DenseOutcome {
                leader: false,
                heard,
                group,
            }
        }
    })
    .map_err(kernel)?;
    let metrics = run.metrics().clone();
    let outcomes: Vec<(u32, DenseOutcome)> = ids
        .iter()
        .copied()
        .zip(run.outputs.into_iter().map(|o| o.expect("device finished")))
        .collect();
    let leaders = outcomes
        .iter()
        .filter(|(_, o)| o.leader)
        .map(|(id, _)| *id)
        .collect();
    Ok(DenseLeReport {
        leaders,
        outcomes,
        depth: sched.depth,
        metrics,
        scheduled_slots: fin + 1,
    })
}

#[derive(Debug, Clone)]
pub struct DenseCensusReport {
    /// The set heard in the last relay slot.
    pub census: Option<IdSet>,
    /// Every active device ended with the same census.
    pub agreed: bool,
    pub leader_group_size: u32,
    /// Active devices outside the final group.
    pub dropped: usize,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
}

/// Let every active device learn the exact set of active IDs in `[n]`.
pub fn dense_census(
    n: u64,
    active: &[u32],
    dense: &DenseConfig,
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<DenseCensusReport, DenseError> {
    check_ids(n, active)?;
    let sched = Rc::new(DenseSchedule::new(n, *dense)?);
    let parts = sched.census_parts();
    let mut cfg = cfg.clone();
    cfg.max_message_bytes = cfg.max_message_bytes.max(census_message_cap(n));
    let ids = active.to_vec();
    let run = run_async(ids.len(), model, &cfg, |ctx| {
        let id = ids[ctx.index() as usize];
        let sched = sched.clone();
        async move { sched.census_at(&ctx, 0, id).await }
    })
    .map_err(kernel)?;
    let metrics = run.metrics().clone();
    let outs: Vec<CensusView> = run
        .outputs
        .into_iter()
        .map(|o| o.expect("device finished"))
        .collect();
    let size = outs
        .iter()
        .filter_map(|v| v.group.ok().map(|(_, s)| s))
        .max()
        .unwrap_or(0);
    if (size as u64) < parts {
        return Err(DenseError::LeaderGroupTooSmall { size, parts });
    }
    let census = outs.iter().find_map(|v| v.census.clone());
    let agreed = outs.iter().all(|v| v.census == census);
    let dropped = outs.iter().filter(|v| v.group.is_err()).count();
    Ok(DenseCensusReport {
        census,
        agreed,
        leader_group_size: size,
        dropped,
        metrics,
        scheduled_slots: sched.census_slots(),
    })
}

fn encode_set(s: &IdSet) -> radio_core::Bytes {
    s.encode(radio_core::wire::Writer::new()).finish()
}

fn decode_set(m: &[u8]) -> Option<IdSet> {
    IdSet::decode(&mut radio_core::wire::Reader::new(m)).ok()
}

#[derive(Debug, Clone)]
pub struct DenseAlgoReport {
    /// Output groups by ID; members in rank order.
    pub groups: Vec<Group<()>>,
    /// Devices that left, with the group that was dropped.
    pub dropped: Vec<(u32, Dropped)>,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
}

/// Run `DenseAlgo_i(n_hat, j)` once on the given groups. Members are device
/// numbers; ranks follow ascending device number, and every member starts
/// out knowing its group's member list.
pub fn dense_algo(
    i: u32,
    n_hat: u64,
    j: u64,
    mode: Mode,
    groups: &[Group<()>],
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<DenseAlgoReport, ProtocolError> {
    let bad = |s: String| Err(ProtocolError::PreconditionViolated(s));
    if j < 2 {
        return bad(format!("j = {j} below 2"));
    }
    if n_hat == 0 {
        return bad("empty group ID space".into());
    }
    let groups: Vec<&Group<()>> = groups.iter().filter(|g| !g.members.is_empty()).collect();
    if groups.is_empty() {
        return Err(ProtocolError::NoActiveDevices);
    }
    let (mut gids, mut devs) = (HashSet::new(), HashSet::new());
    for g in &groups {
        if g.id >= n_hat || !gids.insert(g.id) {
            return bad(format!("bad or repeated group id {}", g.id));
        }
        if let Some(d) = g.members.iter().find(|&&d| !devs.insert(d)) {
            return bad(format!("device {d} in two groups"));
        }
    }
    if mode == Mode::Guarantee {
        if j <= 32 {
            return bad(format!("j = {j} must exceed 32"));
        }
        if let Some(g) = groups.iter().find(|g| (g.members.len() as u64) < j) {
            return bad(format!(
                "group {} has {} members, between 0 and j = {j}",
                g.id,
                g.members.len()
            ));
        }
        if (groups.len() as f64) < n_hat as f64 / (j as f64).log2() {
            return bad(format!(
                "{} rich groups in [{n_hat}] is below density 1/log j",
                groups.len()
            ));
        }
    }
    let plan = Rc::new(DensePlan::new(DEFAULT_CAP));
    let jc = CappedMagnitude::new(j as u128, DEFAULT_CAP);
    let slots = plan.slots(i, n_hat, jc);
    if slots >= Slot::MAX / 2 {
        return bad(format!(
            "DenseAlgo_{i}({n_hat}, {j}) has an unbounded schedule"
        ));
    }
    let mut starts = Vec::new();
    for g in &groups {
        let set: IdSet = g.members.iter().copied().collect();
        for &d in &g.members {
            let st = DState::adopt(d, g.id, Roster::Set(set.clone())).expect("member of own group");
            starts.push(Some((d, st)));
        }
    }
    let mut cfg = cfg.clone();
    let top = starts
        .iter()
        .flatten()
        .map(|(d, _)| *d as u64 + 1)
        .max()
        .unwrap_or(1);
    cfg.max_message_bytes = cfg.max_message_bytes.max(census_message_cap(top) * 4);
    let run = run_async(starts.len(), model, &cfg, |ctx| {
        let (d, st) = starts[ctx.index() as usize].take().unwrap();
        let plan = plan.clone();
        async move {
            (
                d,
                dense_algo_device(&ctx, &plan, i, 0, n_hat, jc, d, st).await,
            )
        }
    })
    .map_err(kernel)?;
    let metrics = run.metrics().clone();
    let mut by_gid: std::collections::BTreeMap<u64, Vec<(u32, u32)>> = Default::default();
    let mut dropped = Vec::new();
    for (d, res) in run.outputs.into_iter().map(|o| o.expect("device finished")) {
        match res {
            Ok(st) => by_gid.entry(st.gid).or_default().push((st.rank, d)),
            Err(x) => dropped.push((d, x)),
        }
    }
    let groups = by_gid
        .into_iter()
        .map(|(id, mut v)| {
            v.sort();
            Group {
                id,
                members: v.into_iter().map(|(_, d)| d).collect(),
                info: (),
            }
        })
        .collect();
    dropped.sort_by_key(|(d, _)| *d);
    Ok(DenseAlgoReport {
        groups,
        dropped,
        metrics,
        scheduled_slots: slots,
    })
}

/// `DenseAlgo_0`: the initialization step alone.
pub fn dense_init(
    n_hat: u64,
    j: u64,
    mode: Mode,
    groups: &[Group<()>],
    model: ModelKind,
    cfg: &RunConfig,
) -> Result<DenseAlgoReport, ProtocolError> {
    dense_algo(0, n_hat, j, mode, groups, model, cfg)
}

/// Lowest `j^5`-density after the initialization step over all layouts of
/// `⌈N̂ / log₂ j⌉` groups of exactly `j` members, for `N̂` a multiple of `2^j`.
///
/// The adversary fills as many parts as possible with `j^4 − 1` groups, which
/// stay below `j^5` members, and packs the rest into full parts.
pub fn worst_init_density(n_hat: u128, j: u32) -> f64 {
    let parts = n_hat >> j;
    let groups = (n_hat as f64 / (j as f64).log2()).ceil() as u128;
    let poor = (j as u128).pow(4) - 1;
    let rest = groups.saturating_sub(parts * poor);
    let rich = rest.div_ceil((1u128 << j) - poor);
    rich as f64 / parts as f64
}

/// Constants measured once and frozen.
pub mod regression {
    /// Max energy of dense leader election with `c = 0.5` for every `N` in `2^10..=2^16`.
    pub const LE_ENERGY_C05: u64 = 35;
    /// Extra energy of one more recursion level in the relaxed `N̂ = 16, j = 2` instance.
    pub const LEVEL_ENERGY: u64 = 5;
}
