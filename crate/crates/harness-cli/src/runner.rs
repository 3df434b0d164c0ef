use dense_protocols::DenseError;
use group_kit::ProtocolError;
use radio_core::{Metrics, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_protocols::RandError;
use serde_json::Value;

use crate::record::{Outcome, ResultRecord};
use crate::scenario::{Protocol, Scenario};
use crate::HarnessError;

/// Caps the number of worker threads when set.
pub const THREADS_ENV: &str = "RADIONET_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Execution::Parallel;
        #[cfg(not(feature = "parallel"))]
        return Execution::Sequential;
    }
}

/// Thread cap from the environment; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(HarnessError::config(
                THREADS_ENV,
                format!("`{v}` is not a positive integer"),
            )),
        },
        Err(_) => Ok(None),
    }
}

/// Validate, then run every trial. Records come back in trial order.
pub fn run_scenario(sc: &Scenario, exec: Execution) -> Result<Vec<ResultRecord>, HarnessError> {
    sc.validate()?;
    let echo = serde_json::to_value(sc).expect("scenario serializes");
    map_trials(sc.trials, exec, |t| trial(sc, &echo, t))
}

/// `f(0..trials)` in trial order, on a capped pool when parallel.
pub(crate) fn map_trials<R, F>(trials: u64, exec: Execution, f: F) -> Result<Vec<R>, HarnessError>
where
    R: Send,
    F: Fn(u64) -> Result<R, HarnessError> + Sync,
{
    match exec {
        Execution::Sequential => (0..trials).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(thread_cap()?.unwrap_or(0))
                .build()
                .map_err(|e| HarnessError::Run(e.to_string()))?;
            pool.install(|| (0..trials).into_par_iter().map(&f).collect())
        }
    }
}

/// Trial `t` of a scenario, validated first.
pub fn run_trial(sc: &Scenario, t: u64) -> Result<ResultRecord, HarnessError> {
    sc.validate()?;
    trial(
        sc,
        &serde_json::to_value(sc).expect("scenario serializes"),
        t,
    )
}

fn zero_metrics(slot_count: u64) -> Metrics {
    Metrics {
        slot_count,
        max_energy: 0,
        avg_energy: 0.0,
        max_message_bytes: 0,
        ledgers: Vec::new(),
    }
}

/// IDs of the active devices: all of `[N]`, or a seeded sample.
pub(crate) fn active_set(big_n: u64, n: u64, seed: u64) -> Vec<u32> {
    if n >= big_n {
        return (0..big_n as u32).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut ids: Vec<u32> = rand::seq::index::sample(&mut rng, big_n as usize, n as usize)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    ids.sort_unstable();
    ids
}

fn trial(sc: &Scenario, echo: &Value, t: u64) -> Result<ResultRecord, HarnessError> {
    let seed = sc.seed.wrapping_add(t);
    let mut run = RunConfig::with_seed(seed);
    if let Some(l) = sc.slot_limit {
        run.slot_limit = l;
    }
    let record = |o: Outcome, correct: bool, failed: bool, m: &Metrics| {
        ResultRecord::new(echo.clone(), t, seed, o, correct, failed, m)
    };
    // a run that stops early has no metrics worth reporting
    let stopped = || {
        record(
            Outcome::default(),
            false,
            true,
            &zero_metrics(sc.slot_limit.unwrap_or(0)),
        )
    };
    let n = sc.n as usize;
    let leader = |ids: &[u32]| Outcome {
        leader_id: ids.first().copied(),
        leader_count: Some(ids.len() as u32),
        ..Outcome::default()
    };
    match sc.protocol {
        Protocol::DetLeaderElection => {
            let active = active_set(sc.big_n, sc.n, seed);
            match det_protocols::det_leader_election(sc.big_n, &active, true, sc.model, &run) {
                Ok(r) => Ok(record(
                    leader(&r.leaders),
                    r.leaders.len() == 1,
                    false,
                    &r.metrics,
                )),
                Err(ProtocolError::Kernel(_)) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
        Protocol::DetCensus => {
            let active = active_set(sc.big_n, sc.n, seed);
            match det_protocols::det_census(sc.big_n, &active, sc.model, &run) {
                Ok(r) => {
                    let size = r.census.as_ref().map(|c| c.len() as u64);
                    let correct =
                        r.announcers.len() == 1 && r.census.is_some_and(|c| c.to_vec() == active);
                    let o = Outcome {
                        leader_id: r.announcers.first().copied(),
                        leader_count: Some(r.announcers.len() as u32),
                        census_size: size,
                        ..Outcome::default()
                    };
                    Ok(record(o, correct, false, &r.metrics))
                }
                Err(ProtocolError::Kernel(_)) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
        Protocol::DenseLeaderElection => {
            let active = active_set(sc.big_n, sc.n, seed);
            match dense_protocols::dense_leader_election(
                sc.big_n,
                &active,
                &sc.dense_config(),
                sc.model,
                &run,
            ) {
                Ok(r) => Ok(record(
                    leader(&r.leaders),
                    r.leaders.len() == 1,
                    false,
                    &r.metrics,
                )),
                Err(ProtocolError::Kernel(_)) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
        Protocol::DenseCensus => {
            let active = active_set(sc.big_n, sc.n, seed);
            match dense_protocols::dense_census(
                sc.big_n,
                &active,
                &sc.dense_config(),
                sc.model,
                &run,
            ) {
                Ok(r) => {
                    let size = r.census.as_ref().map(|c| c.len() as u64);
                    let correct = r.agreed && r.census.is_some_and(|c| c.to_vec() == active);
                    Ok(record(
                        Outcome {
                            census_size: size,
                            ..Outcome::default()
                        },
                        correct,
                        false,
                        &r.metrics,
                    ))
                }
                Err(
                    DenseError::Protocol(ProtocolError::Kernel(_))
                    | DenseError::LeaderGroupTooSmall { .. },
                ) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
        Protocol::TestNetworkSize => {
            let nt = sc.n_tilde();
            match rand_protocols::test_network_size(n, nt, sc.model, sc.tns_config(), &run) {
                Ok(r) => {
                    let mut o = leader(&r.leaders);
                    o.census_size = r.census.as_ref().map(|c| c.len() as u64);
                    let ratio = (n as f64 / nt).max(nt / n as f64);
                    // leader expected within 1.5, none from 1.9 on, anything but two in between
                    let correct = match r.leaders.len() {
                        0 => ratio > 1.5,
                        1 => ratio < 1.9,
                        _ => false,
                    };
                    Ok(record(o, correct, false, &r.metrics))
                }
                Err(RandError::Kernel(_)) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
        Protocol::EstimateNetworkSize => {
            let cfg = rand_protocols::EsnConfig::new(sc.checkpoint_schedule()?);
            let cfg = rand_protocols::EsnConfig {
                tns: sc.tns_config(),
                ..cfg
            };
            match rand_protocols::estimate_network_size(n, sc.model, &cfg, &run) {
                Ok(r) => {
                    let o = Outcome {
                        estimate: r.estimate,
                        index: r.i_tilde,
                        ..Outcome::default()
                    };
                    Ok(record(
                        o,
                        r.success(n),
                        r.slot_limit_hit || !r.agreed,
                        &r.metrics,
                    ))
                }
                Err(RandError::Kernel(_)) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
        Protocol::ExponentialSearch => {
            let sched = sc.checkpoint_schedule()?;
            match rand_protocols::exponential_search(n, &sched, sc.model, &run) {
                Ok(r) => {
                    let target = sched.target_index((n.max(1) as f64).log2());
                    let got = r.agreed();
                    let correct = got.is_some_and(|i| i + 1 >= target && i <= target + 1);
                    Ok(record(
                        Outcome {
                            index: got,
                            ..Outcome::default()
                        },
                        correct,
                        got.is_none(),
                        &r.metrics,
                    ))
                }
                Err(RandError::Kernel(_)) => Ok(stopped()),
                Err(e) => Err(e.into()),
            }
        }
    }
}
