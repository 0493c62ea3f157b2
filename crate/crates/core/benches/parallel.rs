use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gesture_gate::dtw::{self, DtwNormalization, VectorSeries};
use gesture_gate::eval::Pipeline;
use gesture_gate::experiment::{self, ExperimentConfig};
use gesture_gate::motion::Label;
use gesture_gate::par::Execution;
use gesture_gate::synth::{self, ActivityScript};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn random_series(rng: &mut ChaCha8Rng, len: usize) -> VectorSeries {
    VectorSeries::new(3, (0..len * 3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn distance_matrix(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let series: Vec<_> = (0..42).map(|_| random_series(&mut rng, 40)).collect();
    let mut group = c.benchmark_group("distance_matrix_42x40");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| dtw::distance_matrix(&series, DtwNormalization::PathLength, exec).unwrap())
        });
    }
    group.finish();
}

fn dataset_generation(c: &mut Criterion) {
    let scripts = ActivityScript::all_defaults();
    let mut group = c.benchmark_group("generate_dataset_10x(10+2x10)");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| synth::generate_dataset_with(10, 10, &scripts, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn experiment_run(c: &mut Criterion) {
    let scripts: Vec<_> = ["shoulder_abduction", "hip_flexion", "shoulder_external_rotation"]
        .iter()
        .map(|id| ActivityScript::defaults(id).unwrap())
        .collect();
    let data = synth::generate_dataset(12, 10, &scripts, 5).unwrap();
    let correct = data.with_label(Label::Correct);
    let errors = data.without_label(Label::Correct);
    let mut group = c.benchmark_group("experiment_3_activities");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = ExperimentConfig {
            pipelines: vec![Pipeline::MddtwAngles, Pipeline::HmmAngles],
            execution: exec,
            ..ExperimentConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, config| {
            b.iter(|| experiment::run_experiment(config, &correct, &errors).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, distance_matrix, dataset_generation, experiment_run);
criterion_main!(benches);
