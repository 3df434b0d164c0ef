use serde::Serialize;

use crate::record::ResultRecord;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quantiles {
    pub p50: u64,
    pub p95: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: u64,
    pub success_rate: f64,
    pub failure_rate: f64,
    /// Over per-trial max energy.
    pub energy: Quantiles,
    pub slots: Quantiles,
}

/// Nearest-rank quantile: the `⌈p·k⌉`-th smallest of `k` sorted values, rank at least 1.
pub fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    assert!(!sorted.is_empty());
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn quantiles(mut v: Vec<u64>) -> Quantiles {
    v.sort_unstable();
    Quantiles {
        p50: nearest_rank(&v, 0.5),
        p95: nearest_rank(&v, 0.95),
        max: *v.last().unwrap(),
    }
}

pub fn aggregate(records: &[ResultRecord]) -> Result<Summary, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let k = records.len();
    let count =
        |f: fn(&ResultRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / k as f64;
    Ok(Summary {
        records: k as u64,
        success_rate: count(|r| r.correct),
        failure_rate: count(|r| r.failed),
        energy: quantiles(records.iter().map(|r| r.max_energy).collect()),
        slots: quantiles(records.iter().map(|r| r.slot_count).collect()),
    })
}
