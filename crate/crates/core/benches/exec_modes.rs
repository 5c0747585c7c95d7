use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stoq_core::estimators::{
    cnf_ensemble, lambda_stats, replica_ensemble, sbp_matrix, trace_power_sampled, ClusteredSolver,
};
use stoq_core::exec::Exec;
use stoq_core::instances::{
    planted_product_instance, random_stoquastic_hamiltonian, Cnf, GridSpec,
};
use stoq_core::prover::honest_witness;
use stoq_core::walk::{required_steps, WalkConfig, Walker};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn walk_trials(c: &mut Criterion) {
    let inst = planted_product_instance(10, 3, 14, 5).unwrap();
    let w = honest_witness(&inst, 10).unwrap().string();
    let steps = required_steps(inst.n, 0.05, inst.m()).unwrap();
    let mut group = c.benchmark_group("walk_trials");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                let walker = Walker::new(&inst).unwrap();
                walker
                    .acceptance_rate(w, 2000, &WalkConfig::new(steps, 1), exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn sampled_trace(c: &mut Criterion) {
    let inst = random_stoquastic_hamiltonian(10, 12, 3, GridSpec::Continuous).unwrap();
    let g = sbp_matrix(&inst).unwrap().0;
    let mut group = c.benchmark_group("sampled_trace");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| trace_power_sampled(&g, 40, 20_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let cnf = Cnf::parse(
        "p cnf 9 8\n1 4 5 0\n-1 -4 6 0\n2 5 -7 0\n-2 6 7 0\n3 -8 9 0\n-3 8 0\n4 -9 0\n-6 -7 8 0\n",
    )
    .unwrap();
    let ens = replica_ensemble(&cnf_ensemble(&cnf, 3).unwrap(), 8).unwrap();
    let mut group = c.benchmark_group("ensemble_samples");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| lambda_stats(&ens, 200, 3, &ClusteredSolver::new(12), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = walk_trials, sampled_trace, ensemble
}
criterion_main!(benches);
