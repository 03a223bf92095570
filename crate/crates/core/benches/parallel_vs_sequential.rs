use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use niqzk::circuits::{Circuit, Gate};
use niqzk::par::Execution;
use niqzk::protocol::{build_qsci_verifier, numeric_cheat_search, random_prover_acceptances};
use niqzk::reductions::gna_sweep;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn gna(c: &mut Criterion) {
    let mut group = c.benchmark_group("gna_sweep_n4");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| gna_sweep(black_box(4), exec).unwrap())
        });
    }
    group.finish();
}

/// Three qubits with one output, far from maximally mixed.
fn no_instance() -> Circuit {
    let gates = vec![
        Gate::H(0),
        Gate::T(0),
        Gate::Cnot {
            control: 0,
            target: 1,
        },
        Gate::H(2),
    ];
    Circuit::new(3, 1, gates).unwrap()
}

fn cheat(c: &mut Criterion) {
    let protocol = build_qsci_verifier(&no_instance()).unwrap();
    let mut group = c.benchmark_group("cheat_search_8_restarts");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| numeric_cheat_search(protocol.spec(), 8, 300, black_box(1), exec).unwrap())
        });
    }
    group.finish();
}

fn random_provers(c: &mut Criterion) {
    let protocol = build_qsci_verifier(&no_instance()).unwrap();
    let mut group = c.benchmark_group("random_provers_500");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| random_prover_acceptances(protocol.spec(), 500, black_box(2), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gna, cheat, random_provers);
criterion_main!(benches);
