//! Circuit simulation by randomly assigned Gate and Saboteur tasks.
//!
//! After the `ℓ` input slots every gate gets `m` contention slots and one
//! announcement slot. A `Gate(g, i)` holder hears the inputs of `g`, sends
//! its value in contention slot `i` and claims the gate if it hears itself.
//! A `Saboteur(g, i, j, ·)` holder that hears a claim in slot `i` jams slot
//! `j`. In No-CD a contention slot is three slots in which the holders of
//! `Gate₁(g, i)` and `Gate₂(g, i)` relay a message back and forth; any
//! third party breaks the relay.
//!
//! A device that holds several tasks runs them side by side. When two of
//! them need different actions in the same slot both are dropped, except
//! that tasks listening to an announcement the device itself makes hear its
//! own message.

use std::rc::Rc;

use radio_core::wire::{Reader, Writer};
use radio_core::{run_async, Bytes, Ctx, Metrics, ModelKind, RunConfig, Signal, Slot, SlotRecord};
use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::circuit::{eval_circuit, Circuit, Src};
use crate::CircuitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// `m = ⌈c_m · log₂ ñ⌉` contention slots per gate.
    pub c_m: f64,
    /// Reject circuits with more than `(log₂ ñ)^4` gates.
    pub guarantee: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            c_m: 3.0,
            guarantee: true,
        }
    }
}

impl SimConfig {
    pub fn m(&self, n_tilde: f64) -> u32 {
        (self.c_m * n_tilde.log2()).ceil().max(1.0) as u32
    }
}

/// Which devices transmit in each input slot. Input bit `k` is 1 iff exactly
/// one device transmits in slot `k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InputPlan(pub Vec<Vec<u32>>);

impl InputPlan {
    /// Device `k` alone creates every 1 bit `k`.
    pub fn forced(bits: &[bool]) -> InputPlan {
        InputPlan(
            bits.iter()
                .enumerate()
                .map(|(k, &b)| if b { vec![k as u32] } else { vec![] })
                .collect(),
        )
    }

    /// Zero, one or two distinct random transmitters per slot.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, l: u32, n: usize) -> InputPlan {
        InputPlan(
            (0..l)
                .map(|_| {
                    let k = rng.random_range(0..=2usize).min(n);
                    rand::seq::index::sample(rng, n, k)
                        .into_iter()
                        .map(|d| d as u32)
                        .collect()
                })
                .collect(),
        )
    }

    pub fn bits(&self) -> Vec<bool> {
        self.0.iter().map(|t| t.len() == 1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateRole {
    /// Sender-CD.
    Solo,
    /// No-CD `Gate₁`: opens and closes the relay, announces.
    First,
    /// No-CD `Gate₂`: answers the relay.
    Second,
}

/// A task, with contention indices counted from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Gate {
        gate: u32,
        i: u32,
        role: GateRole,
    },
    /// Jam contention `j` of `gate` after hearing a claim in contention `i`.
    /// The `k` copies of a saboteur act alike and are not told apart.
    Saboteur {
        gate: u32,
        i: u32,
        j: u32,
    },
}

/// Slot layout shared by all devices.
#[derive(Debug, Clone)]
pub struct Layout {
    pub model: ModelKind,
    pub inputs: u32,
    pub gates: u32,
    pub m: u32,
    pairs: Vec<(u32, u32)>,
}

impl Layout {
    pub fn new(model: ModelKind, inputs: u32, gates: u32, m: u32) -> Layout {
        let pairs = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect();
        Layout {
            model,
            inputs,
            gates,
            m,
            pairs,
        }
    }

    fn width(&self) -> Slot {
        if self.model == ModelKind::NoCD {
            3
        } else {
            1
        }
    }

    fn gate_base(&self, r: u32) -> Slot {
        self.inputs as Slot + r as Slot * (self.width() * self.m as Slot + 1)
    }

    /// First slot of contention `i` of gate `r`.
    pub fn contention(&self, r: u32, i: u32) -> Slot {
        self.gate_base(r) + self.width() * i as Slot
    }

    pub fn announce(&self, r: u32) -> Slot {
        self.gate_base(r) + self.width() * self.m as Slot
    }

    fn is_announce(&self, slot: Slot) -> bool {
        let per = self.width() * self.m as Slot + 1;
        slot >= self.inputs as Slot
            && slot < self.confirm()
            && (slot - self.inputs as Slot) % per == per - 1
    }

    /// No-CD leader check after the last gate.
    pub fn confirm(&self) -> Slot {
        self.gate_base(self.gates)
    }

    pub fn slots(&self) -> Slot {
        self.confirm() + if self.model == ModelKind::NoCD { 2 } else { 0 }
    }

    /// Slot a saboteur of contention `i` listens to.
    fn claim_slot(&self, r: u32, i: u32) -> Slot {
        self.contention(r, i) + (self.width() - 1).min(1)
    }

    fn gate_tasks(&self) -> u64 {
        let roles = if self.model == ModelKind::NoCD { 2 } else { 1 };
        roles * self.m as u64
    }

    fn block(&self) -> u64 {
        self.gate_tasks() + self.pairs.len() as u64 * self.m as u64
    }

    /// `Θ(c·m³)` tasks in all.
    pub fn total_tasks(&self) -> u64 {
        self.block() * self.gates as u64
    }

    /// Task with canonical index `idx < total_tasks()`.
    pub fn task(&self, idx: u64) -> Task {
        let gate = (idx / self.block()) as u32;
        let local = idx % self.block();
        let m = self.m as u64;
        if local < self.gate_tasks() {
            let role = match (self.model == ModelKind::NoCD, local / m) {
                (false, _) => GateRole::Solo,
                (true, 0) => GateRole::First,
                (true, _) => GateRole::Second,
            };
            Task::Gate {
                gate,
                i: (local % m) as u32,
                role,
            }
        } else {
            let (i, j) = self.pairs[((local - self.gate_tasks()) / m) as usize];
            Task::Saboteur { gate, i, j }
        }
    }

    fn check(&self, t: &Task) -> Result<(), String> {
        let nocd = self.model == ModelKind::NoCD;
        match *t {
            Task::Gate { gate, i, role } => {
                if gate >= self.gates || i >= self.m {
                    return Err(format!("{t:?} out of range"));
                }
                if (role == GateRole::Solo) == nocd {
                    return Err(format!("{t:?} does not fit {}", self.model));
                }
            }
            Task::Saboteur { gate, i, j } => {
                if gate >= self.gates || i >= j || j >= self.m {
                    return Err(format!("{t:?} out of range"));
                }
            }
        }
        Ok(())
    }
}

fn claim_msg(gate: u32, bit: bool, token: u32) -> Bytes {
    Writer::new().u32(gate).u8(bit as u8).u32(token).finish()
}

fn jam() -> Bytes {
    Bytes::from_static(&[0])
}

/// The bit of a well-formed message about `gate`.
fn heard(sig: &Signal, gate: u32) -> Option<bool> {
    let mut r = Reader::new(sig.message()?);
    if r.u32().ok()? != gate {
        return None;
    }
    let bit = match r.u8().ok()? {
        0 => false,
        1 => true,
        _ => return None,
    };
    r.u32().ok()?;
    Some(bit)
}

enum Want {
    Nothing,
    Listen,
    Send(Bytes),
}

struct GateState {
    gate: u32,
    i: u32,
    role: GateRole,
    vals: Vec<Option<bool>>,
    value: Option<bool>,
    got: bool,
    claimed: bool,
    confirmed: bool,
    leader: Option<bool>,
}

enum State {
    Input,
    Gate(GateState),
    Sab {
        gate: u32,
        listen: Slot,
        j: u32,
        armed: bool,
    },
}

struct Running {
    state: State,
    alive: bool,
}

struct Plan {
    circuit: Circuit,
    layout: Layout,
    n_tilde: f64,
    fixed: Option<Vec<Vec<Task>>>,
    input_slots: Vec<Vec<Slot>>,
}

#[derive(Debug, Clone, Default)]
struct DeviceOutcome {
    leader: Option<bool>,
    held: u32,
    dropped: u32,
}

impl Plan {
    fn src_slot(&self, s: Src) -> Slot {
        match s {
            Src::Input(k) => k as Slot,
            Src::Gate(q) => self.layout.announce(q),
        }
    }

    /// Push `(slot, id)` for every slot task `id` may touch.
    fn slots_of(&self, st: &State, id: u32, out: &mut Vec<(Slot, u32)>) {
        let l = &self.layout;
        match st {
            State::Input => {}
            State::Gate(g) => {
                out.extend(
                    self.circuit.gates()[g.gate as usize]
                        .srcs
                        .iter()
                        .map(|&s| (self.src_slot(s), id)),
                );
                let t = l.contention(g.gate, g.i);
                out.extend((t..t + l.width()).map(|s| (s, id)));
                if g.role != GateRole::Second {
                    out.push((l.announce(g.gate), id));
                }
                if l.model == ModelKind::NoCD && g.gate == self.circuit.output() {
                    out.extend([(l.confirm(), id), (l.confirm() + 1, id)]);
                }
            }
            State::Sab {
                gate, listen, j, ..
            } => {
                let t = l.contention(*gate, *j);
                out.push((*listen, id));
                out.extend((t..t + l.width()).map(|s| (s, id)));
            }
        }
    }

    fn want(&self, st: &State, slot: Slot, me: u32) -> Want {
        let l = &self.layout;
        match st {
            State::Input => Want::Send(Bytes::from_static(&[1])),
            State::Sab { listen, armed, .. } if slot == *listen => {
                if *armed {
                    Want::Nothing
                } else {
                    Want::Listen
                }
            }
            State::Sab { armed, .. } => {
                if *armed {
                    Want::Send(jam())
                } else {
                    Want::Nothing
                }
            }
            State::Gate(g) => {
                let t = l.contention(g.gate, g.i);
                let Some(v) = g.value.filter(|_| slot >= t) else {
                    return if slot < t {
                        Want::Listen
                    } else {
                        Want::Nothing
                    };
                };
                let msg = || Want::Send(claim_msg(g.gate, v, me));
                let off = slot.wrapping_sub(t);
                if slot == l.announce(g.gate) {
                    return if g.claimed { msg() } else { Want::Nothing };
                }
                if slot == l.confirm() {
                    return match g.role {
                        GateRole::First if g.claimed => msg(),
                        GateRole::Second if g.claimed => Want::Listen,
                        _ => Want::Nothing,
                    };
                }
                if slot == l.confirm() + 1 {
                    return match g.role {
                        GateRole::First if g.claimed => Want::Listen,
                        GateRole::Second if g.confirmed => msg(),
                        _ => Want::Nothing,
                    };
                }
                match (g.role, off) {
                    (GateRole::Solo, 0) | (GateRole::First, 0) => msg(),
                    (GateRole::First, 1) | (GateRole::Second, 0) => Want::Listen,
                    (GateRole::First, 2) | (GateRole::Second, 1) if g.got => msg(),
                    (GateRole::Second, 2) if g.got => Want::Listen,
                    _ => Want::Nothing,
                }
            }
        }
    }

    /// Feed what the task heard (or its transmit feedback) back into it.
    fn hear(&self, st: &mut State, slot: Slot, sig: &Signal, alive: &mut bool) {
        let l = &self.layout;
        match st {
            State::Input => {}
            State::Sab {
                gate,
                listen,
                armed,
                ..
            } => {
                if slot == *listen {
                    *armed = heard(sig, *gate).is_some();
                }
            }
            State::Gate(g) => {
                let t = l.contention(g.gate, g.i);
                if slot < t {
                    let srcs = &self.circuit.gates()[g.gate as usize].srcs;
                    for (pos, &s) in srcs.iter().enumerate() {
                        if self.src_slot(s) != slot {
                            continue;
                        }
                        g.vals[pos] = match s {
                            Src::Input(_) => Some(sig.is_message()),
                            Src::Gate(q) => heard(sig, q),
                        };
                        if g.vals[pos].is_none() {
                            // a silent announcement: the chain is broken
                            *alive = false;
                        }
                    }
                    let bits: Option<Vec<bool>> = g.vals.iter().copied().collect();
                    g.value = bits.map(|b| self.circuit.gates()[g.gate as usize].func.apply(&b));
                    return;
                }
                let ok = heard(sig, g.gate).is_some();
                if slot == l.announce(g.gate) {
                    if g.role == GateRole::Solo && ok && g.gate == self.circuit.output() {
                        g.leader = g.value;
                    }
                    return;
                }
                if slot == l.confirm() {
                    g.confirmed = ok;
                    return;
                }
                if slot == l.confirm() + 1 {
                    if g.role == GateRole::First && ok {
                        g.leader = g.value;
                    }
                    return;
                }
                match (g.role, slot - t) {
                    (GateRole::Solo, 0) => g.claimed = ok,
                    (GateRole::First, 1) | (GateRole::Second, 0) => g.got = ok,
                    (GateRole::First, 2) => g.claimed = true,
                    (GateRole::Second, 2) => g.claimed = ok,
                    _ => {}
                }
            }
        }
    }
}

fn draw_tasks(ctx: &Ctx, plan: &Plan) -> Vec<Task> {
    let l = &plan.layout;
    let geo = Geometric::new(1.0 / plan.n_tilde).expect("ñ >= 2");
    let mut out = Vec::new();
    let mut rng = ctx.rng();
    let mut idx = geo.sample(&mut *rng);
    while idx < l.total_tasks() {
        out.push(l.task(idx));
        idx = idx.saturating_add(1).saturating_add(geo.sample(&mut *rng));
    }
    out
}

async fn device(ctx: Ctx, plan: Rc<Plan>) -> DeviceOutcome {
    let me = ctx.index();
    let raw = match &plan.fixed {
        Some(f) => f.get(me as usize).cloned().unwrap_or_default(),
        None => draw_tasks(&ctx, &plan),
    };
    let mut out = DeviceOutcome {
        held: raw.len() as u32,
        ..Default::default()
    };
    let mut tasks: Vec<Task> = raw;
    tasks.sort_unstable();
    tasks.dedup();

    let l = &plan.layout;
    let mut run: Vec<Running> = Vec::with_capacity(tasks.len());
    let mut at: Vec<(Slot, u32)> = Vec::new();
    for &s in &plan.input_slots[me as usize] {
        at.push((s, run.len() as u32));
        run.push(Running {
            state: State::Input,
            alive: true,
        });
    }
    for t in tasks {
        let state = match t {
            Task::Gate { gate, i, role } => {
                let k = plan.circuit.gates()[gate as usize].srcs.len();
                let g = GateState {
                    gate,
                    i,
                    role,
                    vals: vec![None; k],
                    value: None,
                    got: false,
                    claimed: false,
                    confirmed: false,
                    leader: None,
                };
                State::Gate(g)
            }
            Task::Saboteur { gate, i, j } => State::Sab {
                gate,
                listen: l.claim_slot(gate, i),
                j,
                armed: false,
            },
        };
        plan.slots_of(&state, run.len() as u32, &mut at);
        run.push(Running { state, alive: true });
    }
    at.sort_unstable();
    at.dedup();

    let mut wants: Vec<(u32, Want)> = Vec::new();
    let mut k = 0;
    while k < at.len() {
        let slot = at[k].0;
        let end = k + at[k..].iter().take_while(|e| e.0 == slot).count();
        wants.clear();
        for &(_, id) in &at[k..end] {
            if run[id as usize].alive {
                let w = plan.want(&run[id as usize].state, slot, me);
                if !matches!(w, Want::Nothing) {
                    wants.push((id, w));
                }
            }
        }
        k = end;
        if wants.is_empty() {
            continue;
        }
        let input = wants
            .iter()
            .position(|(id, _)| matches!(run[*id as usize].state, State::Input));
        let sends = wants
            .iter()
            .filter(|(_, w)| matches!(w, Want::Send(_)))
            .count();
        if let Some(p) = input {
            for (other, _) in wants.iter().filter(|(o, _)| *o != wants[p].0) {
                run[*other as usize].alive = false;
                out.dropped += 1;
            }
            wants.swap(0, p);
            wants.truncate(1);
        } else if sends > 1 || (sends == 1 && wants.len() > 1 && !l.is_announce(slot)) {
            for (id, _) in &wants {
                run[*id as usize].alive = false;
                out.dropped += 1;
            }
            continue;
        }
        // an announcer's own later-gate tasks take its announcement as heard
        let own = wants.iter().find_map(|(_, w)| match w {
            Want::Send(b) => Some(b.clone()),
            _ => None,
        });
        let sig = match &own {
            Some(b) => ctx.transmit(slot, b.clone()).await,
            None => ctx.listen(slot).await,
        };
        for (id, w) in &wants {
            let heard = match (w, &own) {
                (Want::Listen, Some(b)) => Signal::Message(b.clone()),
                _ => sig.clone(),
            };
            let Running { state, alive } = &mut run[*id as usize];
            plan.hear(state, slot, &heard, alive);
        }
    }
    out.leader = run.iter().find_map(|r| match &r.state {
        State::Gate(g) => g.leader,
        _ => None,
    });
    out
}

/// Result of one simulation.
#[derive(Debug, Clone)]
pub struct CircuitReport {
    pub m: u32,
    /// The input bits the slots realised.
    pub inputs: Vec<bool>,
    /// `eval_circuit` on those bits.
    pub expected: bool,
    /// `(device, output)` of every leader.
    pub leaders: Vec<(u32, bool)>,
    /// Tasks drawn per device, before conflicts.
    pub held: Vec<u32>,
    pub dropped: u64,
    pub metrics: Metrics,
    pub scheduled_slots: Slot,
    /// Empty unless the run recorded a transcript.
    pub transcript: Vec<SlotRecord>,
}

impl CircuitReport {
    /// The output of the single leader, if there is exactly one.
    pub fn leader_output(&self) -> Option<bool> {
        match self.leaders[..] {
            [(_, b)] => Some(b),
            _ => None,
        }
    }

    pub fn wrong_outputs(&self) -> usize {
        self.leaders.iter().filter(|l| l.1 != self.expected).count()
    }
}

/// Simulate `circuit` on `n` devices that agree on `ñ`, with random tasks.
pub fn simulate_circuit(
    circuit: &Circuit,
    n: usize,
    n_tilde: f64,
    model: ModelKind,
    inputs: &InputPlan,
    cfg: &SimConfig,
    run: &RunConfig,
) -> Result<CircuitReport, CircuitError> {
    simulate(circuit, n, n_tilde, model, inputs, cfg, None, run)
}

/// Same as [`simulate_circuit`] with tasks fixed per device instead of drawn.
#[allow(clippy::too_many_arguments)]
pub fn simulate_circuit_with_tasks(
    circuit: &Circuit,
    n_tilde: f64,
    model: ModelKind,
    inputs: &InputPlan,
    tasks: Vec<Vec<Task>>,
    cfg: &SimConfig,
    run: &RunConfig,
) -> Result<CircuitReport, CircuitError> {
    simulate(
        circuit,
        tasks.len(),
        n_tilde,
        model,
        inputs,
        cfg,
        Some(tasks),
        run,
    )
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    circuit: &Circuit,
    n: usize,
    n_tilde: f64,
    model: ModelKind,
    inputs: &InputPlan,
    cfg: &SimConfig,
    fixed: Option<Vec<Vec<Task>>>,
    run: &RunConfig,
) -> Result<CircuitReport, CircuitError> {
    if !matches!(model, ModelKind::SenderCD | ModelKind::NoCD) {
        return Err(CircuitError::ModelUnsupported(model));
    }
    if !(cfg.c_m.is_finite() && cfg.c_m > 0.0) {
        return Err(CircuitError::Config(format!(
            "c_m = {} must be positive",
            cfg.c_m
        )));
    }
    let pre = |s: String| Err(CircuitError::PreconditionViolated(s));
    if !(n_tilde >= 2.0) {
        return pre(format!("ñ = {n_tilde} is below 2"));
    }
    if model == ModelKind::NoCD && n < 2 {
        return pre("no-cd needs two distinct devices per gate".into());
    }
    let bound = n_tilde.log2().powi(4);
    if cfg.guarantee && circuit.len() as f64 > bound {
        return pre(format!(
            "{} gates exceed (log₂ ñ)^4 = {bound:.0}",
            circuit.len()
        ));
    }
    if inputs.0.len() != circuit.inputs() as usize {
        return pre(format!(
            "{} input slots for {} inputs",
            inputs.0.len(),
            circuit.inputs()
        ));
    }
    let mut input_slots = vec![Vec::new(); n];
    for (k, txs) in inputs.0.iter().enumerate() {
        for &d in txs {
            let Some(v) = input_slots.get_mut(d as usize) else {
                return pre(format!("input slot {k} names device {d} of {n}"));
            };
            v.push(k as Slot);
        }
    }
    let m = cfg.m(n_tilde);
    let layout = Layout::new(model, circuit.inputs(), circuit.len() as u32, m);
    if let Some(f) = &fixed {
        for t in f.iter().flatten() {
            layout.check(t).map_err(CircuitError::Config)?;
        }
    }
    let plan = Rc::new(Plan {
        circuit: circuit.clone(),
        layout,
        n_tilde,
        fixed,
        input_slots,
    });
    let res = run_async(n, model, run, |ctx| device(ctx, plan.clone()))
        .map_err(|e| CircuitError::Kernel(e.to_string()))?;
    let outs: Vec<DeviceOutcome> = res
        .outputs
        .into_iter()
        .map(|o| o.expect("device finished"))
        .collect();
    let bits = inputs.bits();
    Ok(CircuitReport {
        m,
        expected: eval_circuit(circuit, &bits)?,
        inputs: bits,
        leaders: outs
            .iter()
            .enumerate()
            .filter_map(|(d, o)| Some((d as u32, o.leader?)))
            .collect(),
        held: outs.iter().map(|o| o.held).collect(),
        dropped: outs.iter().map(|o| o.dropped as u64).sum(),
        metrics: res.transcript.metrics,
        transcript: res.transcript.slots,
        scheduled_slots: plan.layout.slots(),
    })
}
