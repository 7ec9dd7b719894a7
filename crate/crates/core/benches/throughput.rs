use bellmem_core::enumerator::Enumerator;
use bellmem_core::montecarlo::{estimate, SimulationPlan};
use bellmem_core::strategies::{guessing_model, Model};
use bellmem_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn monte_carlo(c: &mut Criterion) {
    let model = Model::from_name("guessing", None).unwrap();
    let plan = SimulationPlan::new(1000, 2000, 1, 0.1).unwrap();
    let mut g = c.benchmark_group("monte_carlo_guessing_n1000_r2000");
    g.sample_size(10);
    for (label, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| estimate(&model, &plan, mode).unwrap())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let model = guessing_model();
    let mut g = c.benchmark_group("enumerate_guessing_n8");
    g.sample_size(10);
    for (label, mode) in MODES {
        let e = Enumerator::new(8).with_execution(mode);
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| e.exact_expectations(&model, 8).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, enumeration);
criterion_main!(benches);
