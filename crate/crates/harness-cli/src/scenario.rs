use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dense_protocols::{check_density, DenseConfig, DenseError};
use group_kit::ProtocolError;
use radio_core::ModelKind;
use rand_protocols::{
    make_schedule, CheckpointSchedule, RandError, ScheduleKind, TnsConfig, TnsPlan, MIN_D1,
};
use serde::{Serialize, Serializer};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    DetLeaderElection,
    DetCensus,
    DenseLeaderElection,
    DenseCensus,
    TestNetworkSize,
    EstimateNetworkSize,
    ExponentialSearch,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::DetLeaderElection,
        Protocol::DetCensus,
        Protocol::DenseLeaderElection,
        Protocol::DenseCensus,
        Protocol::TestNetworkSize,
        Protocol::EstimateNetworkSize,
        Protocol::ExponentialSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::DetLeaderElection => "det_leader_election",
            Protocol::DetCensus => "det_census",
            Protocol::DenseLeaderElection => "dense_leader_election",
            Protocol::DenseCensus => "dense_census",
            Protocol::TestNetworkSize => "test_network_size",
            Protocol::EstimateNetworkSize => "estimate_network_size",
            Protocol::ExponentialSearch => "exponential_search",
        }
    }

    /// Runs on an explicit set of IDs in `[N]`.
    pub fn uses_ids(self) -> bool {
        matches!(
            self,
            Protocol::DetLeaderElection
                | Protocol::DetCensus
                | Protocol::DenseLeaderElection
                | Protocol::DenseCensus
        )
    }

    pub fn uses_schedule(self) -> bool {
        matches!(
            self,
            Protocol::EstimateNetworkSize | Protocol::ExponentialSearch
        )
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key = s.replace('-', "_");
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Protocol::ALL.iter().map(|p| p.name()).collect();
                format!(
                    "unknown protocol `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

impl Serialize for Protocol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

pub(crate) fn ser_model<S: Serializer>(m: &ModelKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.cli_name())
}

fn ser_schedule<S: Serializer>(k: &Option<ScheduleKind>, s: S) -> Result<S::Ok, S::Error> {
    match k {
        Some(k) => s.serialize_str(&k.to_string()),
        None => s.serialize_none(),
    }
}

/// How many devices are active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Population {
    Count(u64),
    /// `⌈c·N⌉` devices.
    Density(f64),
}

/// One experiment: a protocol, a model and everything needed to run `trials` seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub protocol: Protocol,
    #[serde(serialize_with = "ser_model")]
    pub model: ModelKind,
    pub big_n: u64,
    /// Active devices; resolved from the density when one was given.
    pub n: u64,
    pub density: Option<f64>,
    pub seed: u64,
    pub trials: u64,
    #[serde(serialize_with = "ser_schedule")]
    pub schedule: Option<ScheduleKind>,
    pub d1: u64,
    /// Estimate handed to `test_network_size`; `n` if unset.
    pub n_tilde: Option<f64>,
    pub c_id: f64,
    pub beta: u32,
    /// Census density inside the network-size test.
    pub tns_c: f64,
    /// Density constant of the dense protocols; `min(n/N, 0.5)` if unset.
    pub dense_c: Option<f64>,
    pub slot_limit: Option<u64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Scenario {
    /// A scenario with default constants.
    pub fn new(
        protocol: Protocol,
        model: ModelKind,
        big_n: u64,
        population: Population,
        seed: u64,
        trials: u64,
    ) -> Scenario {
        let tns = TnsConfig::default();
        let (n, density) = match population {
            Population::Count(n) => (n, None),
            Population::Density(c) => ((c * big_n as f64).ceil() as u64, Some(c)),
        };
        Scenario {
            protocol,
            model,
            big_n,
            n,
            density,
            seed,
            trials,
            schedule: protocol
                .uses_schedule()
                .then_some(ScheduleKind::Geometric { gamma: 2.0 }),
            d1: MIN_D1,
            n_tilde: None,
            c_id: tns.c_id,
            beta: tns.beta,
            tns_c: tns.c,
            dense_c: None,
            slot_limit: None,
            out: None,
        }
    }

    pub fn tns_config(&self) -> TnsConfig {
        TnsConfig {
            c_id: self.c_id,
            beta: self.beta,
            c: self.tns_c,
        }
    }

    pub fn n_tilde(&self) -> f64 {
        self.n_tilde.unwrap_or(self.n as f64)
    }

    pub fn dense_config(&self) -> DenseConfig {
        DenseConfig::new(
            self.dense_c
                .unwrap_or_else(|| (self.n as f64 / self.big_n as f64).min(0.5)),
        )
    }

    pub fn checkpoint_schedule(&self) -> Result<CheckpointSchedule, HarnessError> {
        let kind = self
            .schedule
            .unwrap_or(ScheduleKind::Geometric { gamma: 2.0 });
        make_schedule(kind, self.d1).map_err(HarnessError::from)
    }

    /// Check every field and every protocol precondition that can be checked without running.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |field: &'static str, msg: String| Err(HarnessError::config(field, msg));
        if self.trials == 0 {
            return cfg("trials", "need at least one trial".into());
        }
        if let Some(c) = self.density {
            if !(c > 0.0 && c <= 1.0) {
                return cfg("density", format!("{c} outside (0, 1]"));
            }
        }
        if self.slot_limit == Some(0) {
            return cfg("slot-limit", "must be positive".into());
        }
        if self.n == 0 {
            return Err(HarnessError::Precondition("no active devices".into()));
        }
        if self.protocol.uses_ids() {
            if self.big_n == 0 || self.big_n > u32::MAX as u64 {
                return cfg("big-n", format!("{} outside [1, 2^32)", self.big_n));
            }
            if self.n > self.big_n {
                return Err(HarnessError::Precondition(format!(
                    "n = {} exceeds N = {}",
                    self.n, self.big_n
                )));
            }
        }
        if !(self.c_id.is_finite() && self.c_id > 0.0) {
            return cfg("c-id", format!("{} must be positive", self.c_id));
        }
        if self.beta == 0 {
            return cfg("beta", "must be at least 1".into());
        }
        if !(self.tns_c > 0.0 && self.tns_c < 0.8) {
            return cfg("tns-c", format!("{} outside (0, 0.8)", self.tns_c));
        }
        if let Some(c) = self.dense_c {
            if !(c > 0.0 && c < 0.8) {
                return cfg("dense-c", format!("{c} outside (0, 0.8)"));
            }
        }
        if let Some(nt) = self.n_tilde {
            if !(nt.is_finite() && nt > 0.0) {
                return cfg("n-tilde", format!("{nt} must be positive"));
            }
        }
        if self.protocol.uses_schedule() || self.schedule.is_some() {
            self.checkpoint_schedule()?;
        }
        let sender_feedback = self.model.sender_feedback();
        match self.protocol {
            Protocol::DetLeaderElection | Protocol::DetCensus if !sender_feedback => {
                Err(HarnessError::Precondition(format!(
                    "deterministic protocols need sender feedback, {} has none",
                    self.model
                )))
            }
            Protocol::DenseLeaderElection | Protocol::DenseCensus => {
                let dense = self.dense_config();
                if !(dense.c > 0.0 && dense.c < 0.8) || 8.0 / dense.c > 120.0 {
                    return Err(HarnessError::Precondition(format!(
                        "density constant {} is unusable",
                        dense.c
                    )));
                }
                check_density(self.big_n, self.n as usize, dense.c).map_err(HarnessError::from)
            }
            Protocol::TestNetworkSize => {
                TnsPlan::new(self.n_tilde(), self.model, self.tns_config())
                    .map(|_| ())
                    .map_err(Into::into)
            }
            Protocol::EstimateNetworkSize if self.model == ModelKind::NoCD && self.n < 2 => Err(
                HarnessError::Precondition("no-cd needs at least two devices".into()),
            ),
            Protocol::ExponentialSearch => {
                rand_protocols::check_model(self.model).map_err(Into::into)
            }
            _ => Ok(()),
        }
    }
}

impl From<DenseError> for HarnessError {
    fn from(e: DenseError) -> Self {
        match e {
            DenseError::Protocol(p) => p.into(),
            e => HarnessError::Precondition(e.to_string()),
        }
    }
}

impl From<RandError> for HarnessError {
    fn from(e: RandError) -> Self {
        match e {
            RandError::InvalidSchedule(m) => HarnessError::config("schedule", m),
            RandError::Config(m) => HarnessError::config("protocol constants", m),
            RandError::Protocol(p) => p.into(),
            RandError::Kernel(m) => HarnessError::Run(m),
            e @ (RandError::ModelUnsupported(_) | RandError::NTooSmall(_)) => {
                HarnessError::Precondition(e.to_string())
            }
        }
    }
}

impl From<ProtocolError> for HarnessError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::PreconditionViolated(m) => HarnessError::Precondition(m),
            ProtocolError::NoActiveDevices => {
                HarnessError::Precondition("no active devices".into())
            }
            ProtocolError::Kernel(m) => HarnessError::Run(m),
        }
    }
}
