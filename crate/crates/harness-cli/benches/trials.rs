use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use harness_cli::{run_scenario, Execution, Population, Protocol, Scenario};
use radio_core::ModelKind;

fn scenarios() -> Vec<(&'static str, Scenario)> {
    let mut tns = Scenario::new(
        Protocol::TestNetworkSize,
        ModelKind::SenderCD,
        0,
        Population::Count(1000),
        0,
        16,
    );
    tns.n_tilde = Some(1000.0);
    vec![
        ("test_network_size", tns),
        (
            "det_leader_election",
            Scenario::new(
                Protocol::DetLeaderElection,
                ModelKind::SenderCD,
                4096,
                Population::Density(0.5),
                0,
                16,
            ),
        ),
        (
            "estimate_network_size",
            Scenario::new(
                Protocol::EstimateNetworkSize,
                ModelKind::StrongCD,
                0,
                Population::Count(2048),
                0,
                16,
            ),
        ),
    ]
}

fn trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("trials");
    g.sample_size(10);
    for (name, s) in scenarios() {
        g.bench_with_input(BenchmarkId::new("sequential", name), &s, |b, s| {
            b.iter(|| run_scenario(s, Execution::Sequential).unwrap())
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", name), &s, |b, s| {
            b.iter(|| run_scenario(s, Execution::Parallel).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
