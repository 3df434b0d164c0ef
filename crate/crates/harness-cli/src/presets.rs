use radio_core::ModelKind;
use rand_protocols::ScheduleKind;

use crate::scenario::{Population, Protocol, Scenario};

/// `(name, what it sweeps)`.
pub const PRESETS: [(&str, &str); 4] = [
    ("counting-geometric", "approximate counting, d_i = 2·d_(i-1), n in {2^10, 2^12}, all models"),
    ("counting-poly", "approximate counting, d_i = d_(i-1)^1.25, n in {2^10, 2^12}, all models"),
    ("counting-double-exp", "approximate counting, double-exponential checkpoints with ε = 0.6, n in {2^10, 2^12}, all models"),
    ("energy-separation", "approximate counting in strong-cd against sender-cd, n in {2^10, 2^12, 2^14}"),
];

fn counting(kind: ScheduleKind, logs: &[u32], models: &[ModelKind], trials: u64) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &model in models {
        for &e in logs {
            let n = 1u64 << e;
            let mut s = Scenario::new(
                Protocol::EstimateNetworkSize,
                model,
                n,
                Population::Count(n),
                0,
                trials,
            );
            s.schedule = Some(kind);
            out.push(s);
        }
    }
    out
}

/// Scenarios of a named preset, or `None` for an unknown name.
pub fn preset(name: &str, trials: u64) -> Option<Vec<Scenario>> {
    let all = ModelKind::ALL;
    Some(match name {
        "counting-geometric" => counting(
            ScheduleKind::Geometric { gamma: 2.0 },
            &[10, 12],
            &all,
            trials,
        ),
        "counting-poly" => counting(
            ScheduleKind::Polynomial { eps: 0.5 },
            &[10, 12],
            &all,
            trials,
        ),
        "counting-double-exp" => counting(
            ScheduleKind::DoubleExp { eps: 0.6 },
            &[10, 12],
            &all,
            trials,
        ),
        "energy-separation" => counting(
            ScheduleKind::Geometric { gamma: 2.0 },
            &[10, 12, 14],
            &[ModelKind::StrongCD, ModelKind::SenderCD],
            trials,
        ),
        _ => return None,
    })
}
