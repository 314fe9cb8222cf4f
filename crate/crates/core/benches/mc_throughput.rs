use criterion::{criterion_group, criterion_main, Criterion};

use rcs_core::channel::{ChannelKind, ChannelSpec};
use rcs_core::circuit::PlacementMode;
use rcs_core::harness::{BitstringSelector, Execution, Experiment, ExperimentConfig, Target};

fn experiment() -> Experiment {
    let config = ExperimentConfig {
        n: 4,
        depth: 4,
        channel: ChannelSpec::standard(ChannelKind::AmpThenDep, 0.2, 0.1),
        placement: PlacementMode::AfterEveryGateWithFinalLayer,
        final_rotations: None,
        samples: 200,
        seed: 1,
        targets: vec![Target::Px, Target::Collision],
        bitstrings: BitstringSelector::default(),
        alpha: 1.0,
        workers: 1,
    };
    Experiment::new(&config).expect("valid config")
}

fn mc_throughput(c: &mut Criterion) {
    let exp = experiment();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    let mut group = c.benchmark_group("mc_n4_d4_200");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| exp.run(Execution::Sequential, 3.0).unwrap())
    });
    group.bench_function(format!("parallel_{workers}"), |b| {
        b.iter(|| exp.run(Execution::Parallel { workers }, 3.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, mc_throughput);
criterion_main!(benches);
