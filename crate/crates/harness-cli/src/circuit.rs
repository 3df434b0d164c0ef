use std::fmt;
use std::str::FromStr;

use circuit_sim::{simulate_circuit, Circuit, CircuitError, InputPlan, SimConfig};
use radio_core::{ModelKind, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::record::{Outcome, ResultRecord};
use crate::runner::{map_trials, Execution};
use crate::scenario::ser_model;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    /// Zero, one or two random transmitters per input slot, fresh each trial.
    Random,
    /// Bit `k` is sent by device `k` alone, or by nobody.
    Bits(Vec<bool>),
}

impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "random" {
            return Ok(InputSpec::Random);
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!(
                    "inputs must be `random` or a bit string, got `{s}`"
                )),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(InputSpec::Bits)
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::Random => f.write_str("random"),
            InputSpec::Bits(b) => b
                .iter()
                .try_for_each(|&x| f.write_str(if x { "1" } else { "0" })),
        }
    }
}

impl Serialize for InputSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn ser_circuit_name<S: Serializer>(_: &(), s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("circuit")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitScenario {
    #[serde(serialize_with = "ser_circuit_name")]
    pub protocol: (),
    pub file: String,
    #[serde(serialize_with = "ser_model")]
    pub model: ModelKind,
    pub n: u64,
    pub n_tilde: f64,
    pub seed: u64,
    pub trials: u64,
    pub c_m: f64,
    pub inputs: InputSpec,
}

impl CircuitScenario {
    pub fn new(
        file: impl Into<String>,
        model: ModelKind,
        n: u64,
        n_tilde: f64,
        seed: u64,
        trials: u64,
    ) -> Self {
        CircuitScenario {
            protocol: (),
            file: file.into(),
            model,
            n,
            n_tilde,
            seed,
            trials,
            c_m: SimConfig::default().c_m,
            inputs: InputSpec::Random,
        }
    }
}

fn circuit_error(e: CircuitError) -> HarnessError {
    match e {
        CircuitError::Parse { .. } | CircuitError::InvalidCircuit(_) => {
            HarnessError::config("file", e)
        }
        CircuitError::Config(m) => HarnessError::config("circuit constants", m),
        CircuitError::ModelUnsupported(_) | CircuitError::PreconditionViolated(_) => {
            HarnessError::Precondition(e.to_string())
        }
        CircuitError::Kernel(m) => HarnessError::Run(m),
    }
}

/// Simulate `circuit` for every trial; a trial is correct when a leader holds the true output.
pub fn run_circuit(
    circuit: &Circuit,
    sc: &CircuitScenario,
    exec: Execution,
) -> Result<Vec<ResultRecord>, HarnessError> {
    if sc.trials == 0 {
        return Err(HarnessError::config("trials", "need at least one trial"));
    }
    if !(sc.c_m.is_finite() && sc.c_m > 0.0) {
        return Err(HarnessError::config(
            "c-m",
            format!("{} must be positive", sc.c_m),
        ));
    }
    if let InputSpec::Bits(b) = &sc.inputs {
        if b.len() != circuit.inputs() as usize {
            return Err(HarnessError::config(
                "inputs",
                format!(
                    "{} bits for a circuit with {} inputs",
                    b.len(),
                    circuit.inputs()
                ),
            ));
        }
        if b.len() as u64 > sc.n {
            return Err(HarnessError::Precondition(format!(
                "{} input senders need n >= {}",
                b.len(),
                b.len()
            )));
        }
    }
    let cfg = SimConfig {
        c_m: sc.c_m,
        ..SimConfig::default()
    };
    let echo = serde_json::to_value(sc).expect("scenario serializes");
    map_trials(sc.trials, exec, |t| {
        let seed = sc.seed.wrapping_add(t);
        let plan = match &sc.inputs {
            InputSpec::Bits(b) => InputPlan::forced(b),
            InputSpec::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2);
                InputPlan::random(&mut rng, circuit.inputs(), sc.n as usize)
            }
        };
        let r = simulate_circuit(
            circuit,
            sc.n as usize,
            sc.n_tilde,
            sc.model,
            &plan,
            &cfg,
            &RunConfig::with_seed(seed),
        )
        .map_err(circuit_error)?;
        let o = Outcome {
            leader_id: r.leaders.first().map(|l| l.0),
            leader_count: Some(r.leaders.len() as u32),
            output: r.leader_output(),
            ..Outcome::default()
        };
        let correct = r.wrong_outputs() == 0 && r.leader_output() == Some(r.expected);
        Ok(ResultRecord::new(
            echo.clone(),
            t,
            seed,
            o,
            correct,
            r.leaders.is_empty(),
            &r.metrics,
        ))
    })
}
