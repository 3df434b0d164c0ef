use radio_core::{ModelKind, RunConfig, Signal};
use rand::SeedableRng;
use rand_protocols::{
    exponential_search, exponential_search_aggregate, listener_verdict, make_schedule, probe_test,
    RandError, ScheduleKind, SearchState, Verdict,
};

const CD: [ModelKind; 2] = [ModelKind::StrongCD, ModelKind::ReceiverCD];

fn geo2() -> rand_protocols::CheckpointSchedule {
    make_schedule(ScheduleKind::Geometric { gamma: 2.0 }, 14).unwrap()
}

#[test]
fn needs_listener_detection() {
    for m in [ModelKind::SenderCD, ModelKind::NoCD] {
        assert_eq!(
            probe_test(8, 4, m, &RunConfig::default()),
            Err(RandError::ModelUnsupported(m))
        );
        assert_eq!(
            exponential_search(8, &geo2(), m, &RunConfig::default()).unwrap_err(),
            RandError::ModelUnsupported(m)
        );
    }
}

#[test]
fn verdict_depends_only_on_silence() {
    assert_eq!(listener_verdict(&Signal::Silence), Verdict::AtLeast);
    assert_eq!(listener_verdict(&Signal::Noise), Verdict::Below);
    assert_eq!(
        listener_verdict(&Signal::Message(radio_core::Bytes::from_static(&[1]))),
        Verdict::Below
    );
}

#[test]
fn dense_probe_says_below_sparse_says_at_least() {
    for m in CD {
        for seed in 0..20 {
            let run = RunConfig::with_seed(seed);
            assert!(probe_test(1 << 12, 4, m, &run)
                .unwrap()
                .iter()
                .all(|&v| v == Verdict::Below));
            assert!(probe_test(1 << 12, 56, m, &run)
                .unwrap()
                .iter()
                .all(|&v| v == Verdict::AtLeast));
        }
    }
}

#[test]
fn probe_is_unanimous() {
    // d = 12 on 4096 devices: about one transmitter, so both outcomes occur
    let mut seen = [false; 2];
    for seed in 0..60 {
        let v = probe_test(
            1 << 12,
            12,
            ModelKind::ReceiverCD,
            &RunConfig::with_seed(seed),
        )
        .unwrap();
        assert!(v.iter().all(|&x| x == v[0]), "seed {seed}");
        seen[(v[0] == Verdict::Below) as usize] = true;
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn doubling_then_bisect() {
    // î = 6: tests 1, 2, 4, 8, then 6, 5
    let mut s = SearchState::new();
    let mut asked = vec![];
    while let Some(i) = s.next_test() {
        asked.push(i);
        s.record(if i >= 6 {
            Verdict::AtLeast
        } else {
            Verdict::Below
        });
    }
    assert_eq!(asked, vec![1, 2, 4, 8, 6, 5]);
    assert_eq!(s.result(), Some(6));
    assert_eq!(s.slots_used(), 6);

    let mut s = SearchState::new();
    s.record(Verdict::AtLeast);
    assert_eq!(s.result(), Some(1));
}

#[test]
fn small_network_lands_on_first_indices() {
    for m in CD {
        for seed in 0..100 {
            let r = exponential_search(1 << 12, &geo2(), m, &RunConfig::with_seed(seed)).unwrap();
            let i = r.agreed().expect("devices agree");
            assert!(i == 1 || i == 2, "ĩ {i}");
            assert!(r.metrics.max_energy as u64 <= r.slots);
        }
    }
}

#[test]
fn huge_network_in_aggregate() {
    let s = geo2();
    assert_eq!(s.target_index(40.0), 3);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let hits = (0..1000)
        .filter(|_| (2..=4).contains(&exponential_search_aggregate(1 << 40, &s, &mut rng).0))
        .count();
    assert!(hits >= 950, "{hits}/1000");
}

#[test]
fn same_seed_same_result() {
    let s = geo2();
    for seed in 0..10 {
        let a =
            exponential_search(3000, &s, ModelKind::StrongCD, &RunConfig::with_seed(seed)).unwrap();
        let b =
            exponential_search(3000, &s, ModelKind::StrongCD, &RunConfig::with_seed(seed)).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.metrics, b.metrics);
    }
}
