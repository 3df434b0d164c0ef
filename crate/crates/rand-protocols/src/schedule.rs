//! Checkpoint schedules `D = {d_1, d_2, …}`.

use std::fmt;

use crate::RandError;

/// Smallest first checkpoint with `2^(d_1/2) >= 100` and `Σ_{k>=d_1} 2^(-k/2) <= 1`.
pub const MIN_D1: u64 = 14;

/// Terms are computed up to the first one at or above this bound; later
/// indices read as `u64::MAX`. Labels never get anywhere near it.
const TERM_BOUND: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `d_i = ⌈γ·d_{i−1}⌉`.
    Geometric { gamma: f64 },
    /// `d_i = ⌈d_{i−1}^(1+ε/2)⌉`.
    Polynomial { eps: f64 },
    /// `d_i = ⌈b^(d_{i−1})⌉`.
    Exponential { b: f64 },
    /// `d_i = ⌈2^(2^((log₂ d_{i−1})^ε))⌉`.
    DoubleExp { eps: f64 },
}

impl ScheduleKind {
    fn next(self, d: u64) -> u64 {
        let x = d as f64;
        let v = match self {
            ScheduleKind::Geometric { gamma } => gamma * x,
            ScheduleKind::Polynomial { eps } => x.powf(1.0 + eps / 2.0),
            ScheduleKind::Exponential { b } => b.powf(x),
            ScheduleKind::DoubleExp { eps } => 2f64.powf(2f64.powf(x.log2().powf(eps))),
        };
        if v.is_finite() && v < u64::MAX as f64 {
            v.ceil() as u64
        } else {
            u64::MAX
        }
    }

    fn param(self) -> f64 {
        match self {
            ScheduleKind::Geometric { gamma } => gamma,
            ScheduleKind::Polynomial { eps } | ScheduleKind::DoubleExp { eps } => eps,
            ScheduleKind::Exponential { b } => b,
        }
    }
}

impl fmt::Display for ScheduleKind {
    /// Same syntax as the CLI: `geometric:2`, `poly:0.5`, `exp:2`, `double-exp:0.5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScheduleKind::Geometric { .. } => "geometric",
            ScheduleKind::Polynomial { .. } => "poly",
            ScheduleKind::Exponential { .. } => "exp",
            ScheduleKind::DoubleExp { .. } => "double-exp",
        };
        write!(f, "{name}:{}", self.param())
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = RandError;

    fn from_str(s: &str) -> Result<Self, RandError> {
        let bad = || RandError::InvalidSchedule(format!("cannot parse schedule {s:?}"));
        let (name, v) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = v.parse().map_err(|_| bad())?;
        match name {
            "geometric" => Ok(ScheduleKind::Geometric { gamma: v }),
            "poly" | "polynomial" => Ok(ScheduleKind::Polynomial { eps: v }),
            "exp" | "exponential" => Ok(ScheduleKind::Exponential { b: v }),
            "double-exp" | "double_exp" => Ok(ScheduleKind::DoubleExp { eps: v }),
            _ => Err(bad()),
        }
    }
}

/// A validated checkpoint schedule with its terms precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSchedule {
    kind: ScheduleKind,
    terms: Vec<u64>,
}

/// Build and validate a schedule starting at `d1`.
pub fn make_schedule(kind: ScheduleKind, d1: u64) -> Result<CheckpointSchedule, RandError> {
    let bad = |s: String| Err(RandError::InvalidSchedule(s));
    if d1 < MIN_D1 {
        return bad(format!("d_1 = {d1} is below {MIN_D1}, so 2^(d_1/2) < 100"));
    }
    let p = kind.param();
    if !p.is_finite() {
        return bad(format!("{kind}: parameter is not finite"));
    }
    match kind {
        ScheduleKind::Geometric { gamma } if gamma <= 1.0 => {
            return bad(format!("γ = {gamma} must exceed 1"))
        }
        ScheduleKind::Exponential { b } if b <= 1.0 => {
            return bad(format!("b = {b} must exceed 1"))
        }
        ScheduleKind::Polynomial { eps } | ScheduleKind::DoubleExp { eps } if eps <= 0.0 => {
            return bad(format!("ε = {eps} must be positive"))
        }
        _ => {}
    }
    let mut terms = vec![d1];
    while *terms.last().unwrap() < TERM_BOUND {
        let d = *terms.last().unwrap();
        let next = kind.next(d);
        if next <= d {
            return bad(format!(
                "{kind} is not increasing: d_{} = {d}, next {next}",
                terms.len()
            ));
        }
        terms.push(next);
    }
    Ok(CheckpointSchedule { kind, terms })
}

impl CheckpointSchedule {
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn d1(&self) -> u64 {
        self.terms[0]
    }

    /// `d_i` for `i >= 1`, with `d_0 = 0`.
    pub fn d(&self, i: u32) -> u64 {
        if i == 0 {
            return 0;
        }
        self.terms.get(i as usize - 1).copied().unwrap_or(u64::MAX)
    }

    /// Largest precomputed term.
    pub fn last(&self) -> u64 {
        *self.terms.last().unwrap()
    }

    /// The index `i` with `d_i = k`, if `k` is a checkpoint.
    pub fn index_of(&self, k: u64) -> Option<u32> {
        self.terms.binary_search(&k).ok().map(|p| p as u32 + 1)
    }

    /// `î`: the least `i >= 1` with `log₂ n <= d_i`.
    pub fn target_index(&self, log2_n: f64) -> u32 {
        let mut i = 1;
        while (self.d(i) as f64) < log2_n {
            i += 1;
        }
        i
    }
}
