use circuit_sim::{
    simulate_circuit, simulate_circuit_with_tasks, Circuit, CircuitError, Gate, GateFn, GateRole,
    InputPlan, Layout, SimConfig, Src, Task,
};
use proptest::prelude::*;
use radio_core::{Action, ModelKind, RunConfig};
use rand::SeedableRng;

const MODELS: [ModelKind; 2] = [ModelKind::SenderCD, ModelKind::NoCD];

fn identity() -> Circuit {
    Circuit::new(1, vec![Gate::new(GateFn::Or, vec![Src::Input(0)])], 0).unwrap()
}

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn contention_count() {
    let cfg = SimConfig::default();
    assert_eq!(cfg.m(4096.0), 36);
    assert_eq!(cfg.m(1000.0), 30);
    let l = Layout::new(ModelKind::SenderCD, 4, 8, 36);
    assert_eq!(l.total_tasks(), 8 * (36 + 630 * 36));
    assert_eq!(l.slots(), 4 + 8 * 37);
    let l = Layout::new(ModelKind::NoCD, 4, 8, 36);
    assert_eq!(l.total_tasks(), 8 * (72 + 630 * 36));
    assert_eq!(l.slots(), 4 + 8 * 109 + 2);
}

#[test]
fn rejects_bad_setups() {
    let run = RunConfig::default();
    let cfg = SimConfig::default();
    let plan = InputPlan::forced(&[true]);
    for m in [ModelKind::StrongCD, ModelKind::ReceiverCD] {
        assert_eq!(
            simulate_circuit(&identity(), 8, 8.0, m, &plan, &cfg, &run).unwrap_err(),
            CircuitError::ModelUnsupported(m)
        );
    }
    let pre = |r: Result<_, CircuitError>| matches!(r, Err(CircuitError::PreconditionViolated(_)));
    assert!(pre(simulate_circuit(
        &identity(),
        1,
        8.0,
        ModelKind::NoCD,
        &plan,
        &cfg,
        &run
    )));
    assert!(pre(simulate_circuit(
        &identity(),
        8,
        1.0,
        ModelKind::SenderCD,
        &plan,
        &cfg,
        &run
    )));
    assert!(pre(simulate_circuit(
        &identity(),
        8,
        8.0,
        ModelKind::SenderCD,
        &InputPlan(vec![vec![9]]),
        &cfg,
        &run
    )));
    assert!(pre(simulate_circuit(
        &identity(),
        8,
        8.0,
        ModelKind::SenderCD,
        &InputPlan(vec![]),
        &cfg,
        &run
    )));
    // (log₂ 4)^4 = 16 gates at most
    let big = Circuit::random(&mut rng(0), 2, 17, 2);
    assert!(pre(simulate_circuit(
        &big,
        4,
        4.0,
        ModelKind::SenderCD,
        &InputPlan::forced(&[true, false]),
        &cfg,
        &run
    )));
    let relaxed = SimConfig {
        guarantee: false,
        ..cfg
    };
    assert!(simulate_circuit(
        &big,
        4,
        4.0,
        ModelKind::SenderCD,
        &InputPlan::forced(&[true, false]),
        &relaxed,
        &run
    )
    .is_ok());
}

#[test]
fn empty_network_elects_nobody() {
    let r = simulate_circuit(
        &identity(),
        0,
        4096.0,
        ModelKind::SenderCD,
        &InputPlan(vec![vec![]]),
        &SimConfig::default(),
        &RunConfig::default(),
    )
    .unwrap();
    assert!(r.leaders.is_empty());
    assert_eq!(r.wrong_outputs(), 0);
}

#[test]
fn identity_with_lone_input_transmitter() {
    let plan = InputPlan::forced(&[true]);
    let mut ok = 0;
    for seed in 0..300 {
        let r = simulate_circuit(
            &identity(),
            4096,
            4096.0,
            ModelKind::SenderCD,
            &plan,
            &SimConfig::default(),
            &RunConfig::with_seed(seed),
        )
        .unwrap();
        assert!(r.leaders.iter().all(|l| l.1));
        ok += (r.leader_output() == Some(true)) as usize;
    }
    assert!(ok >= 270, "{ok}/300");
}

#[test]
fn random_circuits_in_no_cd() {
    let mut g = rng(8);
    let c = Circuit::random(&mut g, 4, 8, 2);
    let mut led = 0;
    for seed in 0..40 {
        let plan = InputPlan::random(&mut g, 4, 4096);
        let r = simulate_circuit(
            &c,
            4096,
            4096.0,
            ModelKind::NoCD,
            &plan,
            &SimConfig::default(),
            &RunConfig::with_seed(seed),
        )
        .unwrap();
        assert_eq!(r.wrong_outputs(), 0);
        assert!(r.leaders.len() <= 1);
        led += r.leaders.len();
    }
    assert!(led >= 34, "{led}/40");
}

#[test]
fn never_wrong_even_with_a_bad_estimate() {
    let mut g = rng(2);
    for m in MODELS {
        for n in [2usize, 16, 64, 256, 1024, 4096] {
            for seed in 0..6 {
                let c = Circuit::random(&mut g, 3, 6, 2);
                let plan = InputPlan::random(&mut g, 3, n);
                let r = simulate_circuit(
                    &c,
                    n,
                    256.0,
                    m,
                    &plan,
                    &SimConfig::default(),
                    &RunConfig::with_seed(seed),
                )
                .unwrap();
                assert_eq!(r.wrong_outputs(), 0, "{m} n {n}");
                assert!(r.leaders.len() <= 1, "{m} n {n}");
            }
        }
    }
}

#[test]
fn energy_is_bounded_by_tasks_held() {
    let mut g = rng(3);
    let c = Circuit::random(&mut g, 4, 8, 2);
    for m in MODELS {
        let plan = InputPlan::random(&mut g, 4, 4096);
        let r = simulate_circuit(
            &c,
            4096,
            4096.0,
            m,
            &plan,
            &SimConfig::default(),
            &RunConfig::with_seed(1),
        )
        .unwrap();
        for (d, l) in r.metrics.ledgers.iter().enumerate() {
            let inputs = plan.0.iter().filter(|t| t.contains(&(d as u32))).count() as u64;
            assert!(
                l.energy() <= 8 * r.held[d] as u64 + inputs,
                "{m} device {d}"
            );
        }
        assert!(r.metrics.slot_count <= r.scheduled_slots);
    }
}

#[test]
fn mean_energy_tracks_c_log3_over_estimate() {
    let mut g = rng(4);
    let c = Circuit::random(&mut g, 4, 8, 2);
    for m in MODELS {
        for nt in [256usize, 1024, 4096] {
            let mut sum = 0.0;
            for seed in 0..3 {
                let plan = InputPlan::random(&mut g, 4, nt);
                let r = simulate_circuit(
                    &c,
                    nt,
                    nt as f64,
                    m,
                    &plan,
                    &SimConfig::default(),
                    &RunConfig::with_seed(seed),
                )
                .unwrap();
                sum += r.metrics.avg_energy;
            }
            let scale = 8.0 * (nt as f64).log2().powi(3) / nt as f64;
            let ratio = sum / 3.0 / scale;
            assert!(ratio <= 16.0, "{m} ñ {nt}: {ratio}");
        }
    }
}

#[test]
fn same_seed_same_run() {
    let mut g = rng(5);
    let c = Circuit::random(&mut g, 4, 8, 2);
    let plan = InputPlan::random(&mut g, 4, 1000);
    for m in MODELS {
        let a = simulate_circuit(
            &c,
            1000,
            1000.0,
            m,
            &plan,
            &SimConfig::default(),
            &RunConfig::with_seed(9),
        )
        .unwrap();
        let b = simulate_circuit(
            &c,
            1000,
            1000.0,
            m,
            &plan,
            &SimConfig::default(),
            &RunConfig::with_seed(9),
        )
        .unwrap();
        assert_eq!(a.leaders, b.leaders);
        assert_eq!(a.metrics, b.metrics);
    }
}

fn first(i: u32) -> Task {
    Task::Gate {
        gate: 0,
        i,
        role: GateRole::First,
    }
}

fn second(i: u32) -> Task {
    Task::Gate {
        gate: 0,
        i,
        role: GateRole::Second,
    }
}

fn relay(tasks: Vec<Vec<Task>>, bit: bool) -> circuit_sim::CircuitReport {
    let mut run = RunConfig::with_seed(0);
    run.record_transcript = true;
    let plan = InputPlan(vec![if bit { vec![2] } else { vec![] }]);
    simulate_circuit_with_tasks(
        &identity(),
        2.0,
        ModelKind::NoCD,
        &plan,
        tasks,
        &SimConfig::default(),
        &run,
    )
    .unwrap()
}

fn transmitters(r: &circuit_sim::CircuitReport, slot: u64) -> Vec<u32> {
    r.transcript
        .iter()
        .filter(|s| s.slot == slot)
        .flat_map(|s| {
            s.entries
                .iter()
                .filter(|e| matches!(e.action, Action::Transmit(_)))
                .map(|e| e.device)
        })
        .collect()
}

#[test]
fn relay_with_one_pair_succeeds() {
    for bit in [false, true] {
        let r = relay(vec![vec![first(0)], vec![second(0)], vec![]], bit);
        assert_eq!(r.leaders, vec![(0, bit)]);
    }
}

#[test]
fn relay_fails_with_two_first_holders() {
    let r = relay(vec![vec![first(0)], vec![second(0)], vec![first(0)]], false);
    assert!(r.leaders.is_empty());
    let t = Layout::new(ModelKind::NoCD, 1, 1, r.m).contention(0, 0);
    assert!(transmitters(&r, t + 1).is_empty());
}

#[test]
fn relay_fails_with_two_second_holders() {
    let r = relay(
        vec![vec![first(0)], vec![second(0)], vec![second(0)]],
        false,
    );
    assert!(r.leaders.is_empty());
    let t = Layout::new(ModelKind::NoCD, 1, 1, r.m).contention(0, 0);
    assert_eq!(transmitters(&r, t + 1), vec![1, 2]);
}

#[test]
fn idle_saboteur_does_not_interfere() {
    // nothing succeeds in contention 0, so the saboteur stays quiet
    let sab = Task::Saboteur {
        gate: 0,
        i: 0,
        j: 1,
    };
    let r = relay(vec![vec![first(1)], vec![second(1)], vec![sab]], false);
    assert_eq!(r.leaders, vec![(0, false)]);
}

#[test]
fn armed_saboteur_breaks_the_later_relay() {
    let pairs = || vec![vec![first(0), first(1)], vec![second(0), second(1)]];
    // both relays succeed and device 0 would announce twice: it drops both
    let mut tasks = pairs();
    tasks.push(vec![]);
    assert!(relay(tasks, false).leaders.is_empty());

    let mut tasks = pairs();
    tasks.push(vec![Task::Saboteur {
        gate: 0,
        i: 0,
        j: 1,
    }]);
    let r = relay(tasks, false);
    assert_eq!(r.leaders, vec![(0, false)]);
    let t = Layout::new(ModelKind::NoCD, 1, 1, r.m).contention(0, 1);
    for s in t..t + 3 {
        assert!(transmitters(&r, s).contains(&2));
    }
}

#[test]
fn fixed_tasks_must_fit_the_model() {
    let plan = InputPlan::forced(&[true]);
    let solo = vec![
        vec![Task::Gate {
            gate: 0,
            i: 0,
            role: GateRole::Solo,
        }],
        vec![],
    ];
    let r = simulate_circuit_with_tasks(
        &identity(),
        2.0,
        ModelKind::NoCD,
        &plan,
        solo,
        &SimConfig::default(),
        &RunConfig::default(),
    );
    assert!(matches!(r, Err(CircuitError::Config(_))));
    let bad = vec![
        vec![Task::Saboteur {
            gate: 0,
            i: 1,
            j: 1,
        }],
        vec![],
    ];
    let r = simulate_circuit_with_tasks(
        &identity(),
        2.0,
        ModelKind::SenderCD,
        &plan,
        bad,
        &SimConfig::default(),
        &RunConfig::default(),
    );
    assert!(matches!(r, Err(CircuitError::Config(_))));
}

#[test]
fn sender_cd_lone_claimer_leads() {
    // the input comes from device 2, which holds no gate task of its own
    let plan = InputPlan(vec![vec![2]]);
    let solo = |i| Task::Gate {
        gate: 0,
        i,
        role: GateRole::Solo,
    };
    let r = simulate_circuit_with_tasks(
        &identity(),
        2.0,
        ModelKind::SenderCD,
        &plan,
        vec![vec![solo(1)], vec![solo(2)], vec![]],
        &SimConfig::default(),
        &RunConfig::default(),
    )
    .unwrap();
    // no saboteur: both claim, the announcement collides, nobody leads
    assert!(r.leaders.is_empty());
    let r = simulate_circuit_with_tasks(
        &identity(),
        2.0,
        ModelKind::SenderCD,
        &plan,
        vec![
            vec![solo(1)],
            vec![solo(2)],
            vec![Task::Saboteur {
                gate: 0,
                i: 1,
                j: 2,
            }],
        ],
        &SimConfig::default(),
        &RunConfig::default(),
    )
    .unwrap();
    assert_eq!(r.leaders, vec![(0, true)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn task_indices_decode_to_valid_tasks(m in 2u32..20, gates in 1u32..6, nocd in any::<bool>(), frac in 0.0f64..1.0) {
        let model = if nocd { ModelKind::NoCD } else { ModelKind::SenderCD };
        let l = Layout::new(model, 2, gates, m);
        let idx = ((l.total_tasks() as f64 * frac) as u64).min(l.total_tasks() - 1);
        match l.task(idx) {
            Task::Gate { gate, i, role } => {
                prop_assert!(gate < gates && i < m);
                prop_assert_eq!(role == GateRole::Solo, !nocd);
            }
            Task::Saboteur { gate, i, j } => prop_assert!(gate < gates && i < j && j < m),
        }
    }

    #[test]
    fn small_networks_are_safe(seed in any::<u64>(), n in 2usize..40, nt in 2.0f64..64.0, nocd in any::<bool>()) {
        let model = if nocd { ModelKind::NoCD } else { ModelKind::SenderCD };
        let mut g = rng(seed);
        let c = Circuit::random(&mut g, 3, 4, 2);
        let plan = InputPlan::random(&mut g, 3, n);
        let r = simulate_circuit(&c, n, nt, model, &plan, &SimConfig::default(), &RunConfig::with_seed(seed)).unwrap();
        prop_assert_eq!(r.wrong_outputs(), 0);
        prop_assert!(r.leaders.len() <= 1);
    }
}
