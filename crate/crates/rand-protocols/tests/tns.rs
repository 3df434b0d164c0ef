use radio_core::{ModelKind, RunConfig};
use rand_protocols::{assign_ids, test_network_size, RandError, TnsConfig, TnsPlan};

const MODELS: [ModelKind; 4] = [
    ModelKind::StrongCD,
    ModelKind::SenderCD,
    ModelKind::ReceiverCD,
    ModelKind::NoCD,
];

#[test]
fn id_space_size() {
    let p = TnsPlan::new(1024.0, ModelKind::SenderCD, TnsConfig::default()).unwrap();
    assert_eq!(p.n_ids, 400);
    assert_eq!(p.assign_slots, 400);
    assert!((p.threshold() - 130.0).abs() < 1e-9);
    let p = TnsPlan::new(1024.0, ModelKind::NoCD, TnsConfig::default()).unwrap();
    assert_eq!(p.assign_slots, 1600);
    assert!((p.threshold() - 0.325 * 0.325 * 400.0).abs() < 1e-9);
}

#[test]
fn rejects_small_estimates_and_bad_config() {
    let e = TnsPlan::new(62.0, ModelKind::StrongCD, TnsConfig::default()).unwrap_err();
    assert_eq!(e, RandError::NTooSmall(62.0));
    assert!(TnsPlan::new(99.9, ModelKind::StrongCD, TnsConfig::default()).is_err());
    for cfg in [
        TnsConfig {
            beta: 0,
            ..TnsConfig::default()
        },
        TnsConfig {
            c: 0.9,
            ..TnsConfig::default()
        },
    ] {
        assert!(matches!(
            TnsPlan::new(1000.0, ModelKind::StrongCD, cfg),
            Err(RandError::Config(_))
        ));
    }
}

#[test]
fn nobody_gets_ids_from_an_empty_network() {
    for m in MODELS {
        let r = assign_ids(0, 1024.0, m, TnsConfig::default(), &RunConfig::default()).unwrap();
        assert_eq!(r.assigned(), 0);
    }
}

#[test]
fn matched_estimate_hands_out_many_ids() {
    let mut ok = 0;
    for seed in 0..100 {
        let r = assign_ids(
            1024,
            1024.0,
            ModelKind::StrongCD,
            TnsConfig::default(),
            &RunConfig::with_seed(seed),
        )
        .unwrap();
        assert_eq!(r.duplicates, 0);
        ok += (r.assigned() as f64 > 0.325 * r.n_ids as f64) as usize;
    }
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn overestimate_hands_out_few_ids() {
    let mut ok = 0;
    for seed in 0..100 {
        let r = assign_ids(
            1024,
            4096.0,
            ModelKind::NoCD,
            TnsConfig::default(),
            &RunConfig::with_seed(seed),
        )
        .unwrap();
        assert_eq!(r.duplicates, 0);
        ok += ((r.assigned() as f64) < 0.325 * 0.325 * r.n_ids as f64) as usize;
    }
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn ids_are_unique_in_every_model() {
    for m in MODELS {
        for seed in 0..30 {
            let r = assign_ids(
                300,
                200.0,
                m,
                TnsConfig::default(),
                &RunConfig::with_seed(seed),
            )
            .unwrap();
            assert_eq!(r.duplicates, 0, "{m} seed {seed}");
        }
    }
}

#[test]
fn leader_iff_estimate_is_close() {
    for m in MODELS {
        let rate = |nt: f64| {
            (0..40)
                .filter(|&s| {
                    let r = test_network_size(
                        1000,
                        nt,
                        m,
                        TnsConfig::default(),
                        &RunConfig::with_seed(s),
                    )
                    .unwrap();
                    assert!(r.leaders.len() <= 1);
                    r.leaders.len() == 1
                })
                .count()
        };
        assert!(rate(1000.0) >= 36, "{m}");
        assert!(rate(4000.0) <= 2, "{m}");
        assert!(rate(250.0) <= 2, "{m}");
    }
}

#[test]
fn leader_holds_a_census_above_threshold() {
    for m in MODELS {
        let r = test_network_size(
            1000,
            1000.0,
            m,
            TnsConfig::default(),
            &RunConfig::with_seed(9),
        )
        .unwrap();
        let plan = TnsPlan::new(1000.0, m, TnsConfig::default()).unwrap();
        if let Some(c) = &r.census {
            assert!(c.len() as f64 >= plan.threshold());
            assert!(c.len() <= r.assigned);
        }
        assert!(r.metrics.slot_count <= r.scheduled_slots);
    }
}

#[test]
fn overestimate_elects_then_resigns() {
    let mut resigned = 0;
    for seed in 0..20 {
        let r = test_network_size(
            1000,
            4000.0,
            ModelKind::SenderCD,
            TnsConfig::default(),
            &RunConfig::with_seed(seed),
        )
        .unwrap();
        assert!(r.leaders.is_empty());
        resigned += r.resigned;
    }
    assert!(resigned >= 18, "{resigned}");
}

#[test]
fn beta_one_makes_everyone_abstain() {
    let cfg = TnsConfig {
        beta: 1,
        ..TnsConfig::default()
    };
    let r = test_network_size(
        1000,
        1000.0,
        ModelKind::StrongCD,
        cfg,
        &RunConfig::with_seed(1),
    )
    .unwrap();
    assert!(r.leaders.is_empty());
    assert_eq!(r.resigned, 0);
    assert!(r.abstained > 0);
}

#[test]
fn energy_does_not_grow_with_estimate() {
    for m in MODELS {
        let cap = if m.sender_feedback() { 120 } else { 220 };
        let e: Vec<u64> = [200usize, 1000, 5000]
            .iter()
            .map(|&n| {
                test_network_size(
                    n,
                    n as f64,
                    m,
                    TnsConfig::default(),
                    &RunConfig::with_seed(2),
                )
                .unwrap()
                .metrics
                .max_energy
            })
            .collect();
        assert!(e.iter().all(|&x| x <= cap), "{m}: {e:?}");
        assert!(e[2] <= e[0], "{m}: {e:?}");
    }
}
