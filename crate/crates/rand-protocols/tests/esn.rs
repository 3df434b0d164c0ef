use group_kit::ProtocolError;
use radio_core::{ModelKind, RunConfig};
use rand_protocols::{
    estimate_network_size, make_schedule, Decided, EsnConfig, RandError, ScheduleKind,
};

const MODELS: [ModelKind; 4] = [
    ModelKind::StrongCD,
    ModelKind::SenderCD,
    ModelKind::ReceiverCD,
    ModelKind::NoCD,
];

fn geo2() -> EsnConfig {
    EsnConfig::new(make_schedule(ScheduleKind::Geometric { gamma: 2.0 }, 14).unwrap())
}

#[test]
fn small_networks_are_counted_exactly() {
    for m in MODELS {
        for seed in 0..25 {
            let r = estimate_network_size(100, m, &geo2(), &RunConfig::with_seed(seed)).unwrap();
            assert_eq!(r.estimate, Some(100), "{m} seed {seed}");
            assert_eq!(r.decided, Some(Decided::Trivial));
            assert_eq!(r.max_checkpoint_listens, 0);
            assert!(r.success(100));
        }
    }
}

#[test]
fn mid_size_succeeds() {
    for m in MODELS {
        let ok = (0..20)
            .filter(|&s| {
                estimate_network_size(4096, m, &geo2(), &RunConfig::with_seed(s))
                    .unwrap()
                    .success(4096)
            })
            .count();
        assert!(ok >= 18, "{m}: {ok}/20");
    }
}

#[test]
fn large_network_goes_through_the_loop() {
    let n = 1 << 16;
    for m in MODELS {
        let r = estimate_network_size(n, m, &geo2(), &RunConfig::with_seed(1)).unwrap();
        assert!(r.success(n), "{m}: {r:?}");
        assert!(matches!(r.decided, Some(Decided::Checkpoint { .. })));
        assert!(!r.tns_leader_labels.is_empty());
        assert_eq!(r.i_tilde.is_some(), m.listener_detects_noise());
    }
}

#[test]
fn same_seed_same_result() {
    let a =
        estimate_network_size(3000, ModelKind::NoCD, &geo2(), &RunConfig::with_seed(4)).unwrap();
    let b =
        estimate_network_size(3000, ModelKind::NoCD, &geo2(), &RunConfig::with_seed(4)).unwrap();
    assert_eq!(a.estimate, b.estimate);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn tiny_loop_budget_fails_cleanly() {
    let mut cfg = geo2();
    cfg.loop_slot_limit = Some(10);
    let r = estimate_network_size(1 << 15, ModelKind::SenderCD, &cfg, &RunConfig::with_seed(0))
        .unwrap();
    assert!(r.slot_limit_hit);
    assert!(!r.agreed);
    assert!(!r.success(1 << 15));
}

#[test]
fn degenerate_inputs() {
    assert_eq!(
        estimate_network_size(0, ModelKind::StrongCD, &geo2(), &RunConfig::default()).unwrap_err(),
        RandError::Protocol(ProtocolError::NoActiveDevices)
    );
    assert!(matches!(
        estimate_network_size(1, ModelKind::NoCD, &geo2(), &RunConfig::default()),
        Err(RandError::Protocol(ProtocolError::PreconditionViolated(_)))
    ));
    let r = estimate_network_size(1, ModelKind::SenderCD, &geo2(), &RunConfig::default()).unwrap();
    assert_eq!(r.estimate, Some(1));
}
