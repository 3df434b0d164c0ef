use std::io::{BufRead, Write};

use radio_core::Metrics;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::HarnessError;

/// What a trial produced; fields a protocol does not report stay `null`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub leader_id: Option<u32>,
    pub leader_count: Option<u32>,
    pub estimate: Option<u64>,
    /// `ĩ` of an exponential search.
    pub index: Option<u32>,
    pub census_size: Option<u64>,
    /// Circuit output announced by the leader.
    pub output: Option<bool>,
}

/// One trial. Key order on the wire is the field order here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario: Value,
    pub trial: u64,
    pub seed: u64,
    pub outcome: Outcome,
    /// Judged by the harness against the ground truth it alone knows.
    pub correct: bool,
    /// The run hit its slot limit or stopped without an answer.
    pub failed: bool,
    pub slot_count: u64,
    pub max_energy: u64,
    pub avg_energy: f64,
    pub max_message_bytes: u64,
}

impl ResultRecord {
    pub(crate) fn new(
        scenario: Value,
        trial: u64,
        seed: u64,
        outcome: Outcome,
        correct: bool,
        failed: bool,
        m: &Metrics,
    ) -> Self {
        ResultRecord {
            scenario,
            trial,
            seed,
            outcome,
            correct,
            failed,
            slot_count: m.slot_count,
            max_energy: m.max_energy,
            avg_energy: m.avg_energy,
            max_message_bytes: m.max_message_bytes as u64,
        }
    }
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[ResultRecord]) -> Result<(), HarnessError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<ResultRecord>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub const CSV_COLUMNS: [&str; 18] = [
    "trial",
    "seed",
    "protocol",
    "model",
    "big_n",
    "n",
    "correct",
    "failed",
    "leader_id",
    "leader_count",
    "estimate",
    "index",
    "census_size",
    "output",
    "slot_count",
    "max_energy",
    "avg_energy",
    "max_message_bytes",
];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn scenario_cell(s: &Value, key: &str) -> String {
    match s.get(key) {
        Some(Value::String(v)) => v.clone(),
        Some(Value::Null) | None => String::new(),
        Some(v) => v.to_string(),
    }
}

/// Flat CSV with the columns of [`CSV_COLUMNS`].
pub fn write_csv<W: Write>(w: W, records: &[ResultRecord]) -> Result<(), HarnessError> {
    let mut csv = csv::Writer::from_writer(w);
    let io = |e: csv::Error| HarnessError::Io(e.into());
    csv.write_record(CSV_COLUMNS).map_err(io)?;
    for r in records {
        let o = &r.outcome;
        csv.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            scenario_cell(&r.scenario, "protocol"),
            scenario_cell(&r.scenario, "model"),
            scenario_cell(&r.scenario, "big_n"),
            scenario_cell(&r.scenario, "n"),
            r.correct.to_string(),
            r.failed.to_string(),
            cell(o.leader_id),
            cell(o.leader_count),
            cell(o.estimate),
            cell(o.index),
            cell(o.census_size),
            cell(o.output),
            r.slot_count.to_string(),
            r.max_energy.to_string(),
            r.avg_energy.to_string(),
            r.max_message_bytes.to_string(),
        ])
        .map_err(io)?;
    }
    csv.flush()?;
    Ok(())
}
