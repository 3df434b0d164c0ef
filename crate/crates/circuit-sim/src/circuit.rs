//! Constant fan-in boolean circuits and their text format.
//!
//! ```text
//! # majority of three
//! inputs 3
//! gate 0 AND x0 x1
//! gate 1 AND x1 x2
//! gate 2 AND x0 x2
//! gate 3 OR g0 g1
//! gate 4 OR g3 g2
//! output 4
//! ```
//!
//! Sources are `x<k>` for circuit input `k` and `g<k>` for an earlier gate.
//! `TABLE <bits>` lists the output for every row of the truth table in
//! ascending order, first source most significant.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::CircuitError;

pub const DEFAULT_FAN_IN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Src {
    Input(u32),
    Gate(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateFn {
    And,
    Or,
    Not,
    Xor,
    Table(Vec<bool>),
}

impl GateFn {
    pub fn apply(&self, bits: &[bool]) -> bool {
        match self {
            GateFn::And => bits.iter().all(|&b| b),
            GateFn::Or => bits.iter().any(|&b| b),
            GateFn::Not => !bits[0],
            GateFn::Xor => bits.iter().fold(false, |a, &b| a ^ b),
            GateFn::Table(t) => t[bits.iter().fold(0, |row, &b| row << 1 | b as usize)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub func: GateFn,
    pub srcs: Vec<Src>,
}

impl Gate {
    pub fn new(func: GateFn, srcs: Vec<Src>) -> Gate {
        Gate { func, srcs }
    }
}

/// A circuit with gates in topological order and one output gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    inputs: u32,
    gates: Vec<Gate>,
    output: u32,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, CircuitError> {
    Err(CircuitError::InvalidCircuit(msg.into()))
}

impl Circuit {
    pub fn new(inputs: u32, gates: Vec<Gate>, output: u32) -> Result<Circuit, CircuitError> {
        Circuit::with_fan_in(inputs, gates, output, DEFAULT_FAN_IN)
    }

    pub fn with_fan_in(
        inputs: u32,
        gates: Vec<Gate>,
        output: u32,
        fan_in: usize,
    ) -> Result<Circuit, CircuitError> {
        if gates.is_empty() {
            return invalid("no gates");
        }
        for (r, g) in gates.iter().enumerate() {
            check_gate(r, g, inputs, fan_in).map_err(CircuitError::InvalidCircuit)?;
        }
        if output as usize >= gates.len() {
            return invalid(format!("output g{output} does not exist"));
        }
        Ok(Circuit {
            inputs,
            gates,
            output,
        })
    }

    pub fn inputs(&self) -> u32 {
        self.inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> u32 {
        self.output
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Parse the text format with fan-in at most [`DEFAULT_FAN_IN`].
    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        Circuit::parse_with_fan_in(text, DEFAULT_FAN_IN)
    }

    pub fn parse_with_fan_in(text: &str, fan_in: usize) -> Result<Circuit, CircuitError> {
        let mut inputs = None;
        let mut gates = Vec::new();
        let mut output = None;
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let err = |msg: String| CircuitError::Parse { line, msg };
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let words: Vec<&str> = body.split_whitespace().collect();
            match words[0] {
                "inputs" => {
                    if inputs.is_some() || !gates.is_empty() {
                        return Err(err("`inputs` must come first and only once".into()));
                    }
                    let [_, l] = words[..] else {
                        return Err(err("expected `inputs <count>`".into()));
                    };
                    inputs = Some(
                        l.parse::<u32>()
                            .map_err(|_| err(format!("bad input count `{l}`")))?,
                    );
                }
                "gate" => {
                    let l = inputs.ok_or_else(|| err("`gate` before `inputs`".into()))?;
                    if output.is_some() {
                        return Err(err("`gate` after `output`".into()));
                    }
                    if words.len() < 4 {
                        return Err(err("expected `gate <idx> <fn> <src…>`".into()));
                    }
                    let idx: usize = words[1]
                        .parse()
                        .map_err(|_| err(format!("bad gate index `{}`", words[1])))?;
                    if idx != gates.len() {
                        return Err(err(format!("gate index {idx}, expected {}", gates.len())));
                    }
                    let (func, rest) = match words[2] {
                        "AND" => (GateFn::And, &words[3..]),
                        "OR" => (GateFn::Or, &words[3..]),
                        "NOT" => (GateFn::Not, &words[3..]),
                        "XOR" => (GateFn::Xor, &words[3..]),
                        "TABLE" => {
                            let bits = words[3]
                                .chars()
                                .map(|c| match c {
                                    '0' => Ok(false),
                                    '1' => Ok(true),
                                    _ => Err(err(format!("bad table `{}`", words[3]))),
                                })
                                .collect::<Result<Vec<_>, _>>()?;
                            (GateFn::Table(bits), &words[4..])
                        }
                        f => return Err(err(format!("unknown function `{f}`"))),
                    };
                    let srcs = rest
                        .iter()
                        .map(|w| parse_src(w).ok_or_else(|| err(format!("bad source `{w}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    let gate = Gate::new(func, srcs);
                    check_gate(idx, &gate, l, fan_in).map_err(err)?;
                    gates.push(gate);
                }
                "output" => {
                    if output.is_some() {
                        return Err(err("second `output`".into()));
                    }
                    let [_, g] = words[..] else {
                        return Err(err("expected `output <idx>`".into()));
                    };
                    let g: u32 = g
                        .parse()
                        .map_err(|_| err(format!("bad output index `{g}`")))?;
                    if g as usize >= gates.len() {
                        return Err(err(format!("output g{g} does not exist")));
                    }
                    output = Some(g);
                }
                w => return Err(err(format!("unknown directive `{w}`"))),
            }
        }
        let last = text.lines().count().max(1);
        let inputs = inputs.ok_or(CircuitError::Parse {
            line: last,
            msg: "missing `inputs`".into(),
        })?;
        let output = output.ok_or(CircuitError::Parse {
            line: last,
            msg: "missing `output`".into(),
        })?;
        Circuit::with_fan_in(inputs, gates, output, fan_in)
    }

    /// Random circuit over `inputs` inputs; the last gate is the output.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        inputs: u32,
        gates: usize,
        fan_in: usize,
    ) -> Circuit {
        assert!(inputs > 0 && gates > 0 && fan_in > 0);
        let mut gs = Vec::with_capacity(gates);
        for r in 0..gates {
            let k = rng.random_range(1..=fan_in);
            let srcs: Vec<Src> = (0..k)
                .map(|_| {
                    if r > 0 && rng.random_bool(0.6) {
                        Src::Gate(rng.random_range(0..r as u32))
                    } else {
                        Src::Input(rng.random_range(0..inputs))
                    }
                })
                .collect();
            let func = if k == 1 {
                [GateFn::Not, GateFn::Or].choose(rng).unwrap().clone()
            } else {
                match rng.random_range(0..4) {
                    0 => GateFn::And,
                    1 => GateFn::Or,
                    2 => GateFn::Xor,
                    _ => GateFn::Table((0..1 << k).map(|_| rng.random()).collect()),
                }
            };
            gs.push(Gate::new(func, srcs));
        }
        Circuit::with_fan_in(inputs, gs, gates as u32 - 1, fan_in)
            .expect("generated circuit is valid")
    }

    /// Output 1 iff at least `t` of the `l` inputs are 1, built from a
    /// running unary counter of fan-in-2 gates.
    pub fn threshold(l: u32, t: u32) -> Circuit {
        assert!(l > 0 && t > 0 && t <= l);
        let mut gates = Vec::new();
        let mut push = |g: Gate| {
            gates.push(g);
            Src::Gate(gates.len() as u32 - 1)
        };
        // at[k-1]: at least k ones among the inputs so far
        let mut at: Vec<Src> = vec![push(Gate::new(GateFn::Or, vec![Src::Input(0)]))];
        for i in 1..l {
            let x = Src::Input(i);
            let mut next = Vec::new();
            for k in 1..=((i + 1).min(t)) {
                let carry = if k == 1 {
                    x
                } else {
                    push(Gate::new(GateFn::And, vec![at[k as usize - 2], x]))
                };
                let v = match at.get(k as usize - 1) {
                    Some(&prev) => push(Gate::new(GateFn::Or, vec![prev, carry])),
                    None => carry,
                };
                next.push(v);
            }
            at = next;
        }
        let Src::Gate(out) = at[t as usize - 1] else {
            unreachable!("counter entries are gates")
        };
        Circuit::new(l, gates, out).expect("threshold circuit is valid")
    }
}

fn check_gate(r: usize, g: &Gate, inputs: u32, fan_in: usize) -> Result<(), String> {
    let k = g.srcs.len();
    if k == 0 || k > fan_in {
        return Err(format!("gate {r} has fan-in {k}, allowed 1..={fan_in}"));
    }
    match &g.func {
        GateFn::Not if k != 1 => return Err(format!("gate {r}: NOT takes one source")),
        GateFn::Table(t) if t.len() != 1 << k => {
            return Err(format!(
                "gate {r}: table has {} rows, needs {}",
                t.len(),
                1 << k
            ))
        }
        _ => {}
    }
    for s in &g.srcs {
        match *s {
            Src::Input(i) if i >= inputs => {
                return Err(format!("gate {r} reads input x{i} of {inputs}"))
            }
            Src::Gate(q) if q as usize >= r => {
                return Err(format!("gate {r} reads g{q}, not an earlier gate"))
            }
            _ => {}
        }
    }
    Ok(())
}

fn parse_src(w: &str) -> Option<Src> {
    let (kind, num) = w.split_at_checked(1)?;
    let k: u32 = num.parse().ok()?;
    if num.starts_with('+') {
        return None;
    }
    match kind {
        "x" => Some(Src::Input(k)),
        "g" => Some(Src::Gate(k)),
        _ => None,
    }
}

impl fmt::Display for Src {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Src::Input(i) => write!(f, "x{i}"),
            Src::Gate(g) => write!(f, "g{g}"),
        }
    }
}

impl fmt::Display for Circuit {
    /// The text format accepted by [`Circuit::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.inputs)?;
        for (r, g) in self.gates.iter().enumerate() {
            write!(f, "gate {r} ")?;
            match &g.func {
                GateFn::And => write!(f, "AND")?,
                GateFn::Or => write!(f, "OR")?,
                GateFn::Not => write!(f, "NOT")?,
                GateFn::Xor => write!(f, "XOR")?,
                GateFn::Table(t) => {
                    write!(f, "TABLE ")?;
                    for &b in t {
                        write!(f, "{}", b as u8)?;
                    }
                }
            }
            for s in &g.srcs {
                write!(f, " {s}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "output {}", self.output)
    }
}

/// Values of every gate, in order.
pub fn eval_gates(c: &Circuit, inputs: &[bool]) -> Result<Vec<bool>, CircuitError> {
    if inputs.len() != c.inputs as usize {
        return invalid(format!(
            "{} input bits for a circuit with {} inputs",
            inputs.len(),
            c.inputs
        ));
    }
    let mut vals: Vec<bool> = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        let bits: Vec<bool> = g
            .srcs
            .iter()
            .map(|s| match *s {
                Src::Input(i) => inputs[i as usize],
                Src::Gate(q) => vals[q as usize],
            })
            .collect();
        vals.push(g.func.apply(&bits));
    }
    Ok(vals)
}

/// Reference evaluation, gate by gate.
pub fn eval_circuit(c: &Circuit, inputs: &[bool]) -> Result<bool, CircuitError> {
    Ok(eval_gates(c, inputs)?[c.output as usize])
}
