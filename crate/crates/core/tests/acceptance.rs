//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Expected values are recomputed here from independent oracles
//! (brute-force automorphism counts, closed forms for qubit metrics,
//! explicit inner products) rather than read back from the library.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use niqzk::circuits::{Circuit, Gate};
use niqzk::par::Execution;
use niqzk::problems::{
    decide_1qsci, distance_to_identity, find_rigid_graph, Graph, QsciInstance, StateSource,
    Tomography,
};
use niqzk::protocol::{
    acceptance_probability, build_qsci_verifier, honest_prover, numeric_cheat_search,
    optimal_cheat_bound, random_prover_acceptances, zk_audit, AcceptRule, ProtocolSpec,
    SimulatorState,
};
use niqzk::qcore::{fidelity, purify, trace_distance, uhlmann_unitary, DensityOperator, PureState};
use niqzk::random::{
    derive_seed, haar_unitary, random_density, random_pure_state, seeded, SeededRng,
};
use niqzk::reductions::{
    amplified_distance_bound, amplify, bqp_to_1qsci, gna_circuit, gna_output_state, gna_sweep,
    gna_to_qsci, protocol_to_qsci,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// Stdout of each command, plus every file written, by name.
type CliRun = (Vec<Vec<u8>>, BTreeMap<String, Vec<u8>>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---------------------------------------------------------------- oracles

/// Automorphisms by enumerating all permutations with Heap's algorithm.
fn oracle_automorphisms(g: &Graph) -> u64 {
    let n = g.n();
    let mut p: Vec<usize> = (0..n).collect();
    let preserves = |p: &[usize]| {
        (0..n).all(|u| (u + 1..n).all(|v| g.has_edge(u, v) == g.has_edge(p[u], p[v])))
    };
    let mut count = u64::from(preserves(&p));
    let mut stack = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(stack[i], i);
            }
            count += u64::from(preserves(&p));
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    count
}

/// `1 − K/2^{q_L}` where the `n!/|Aut|` distinct relabellings and the
/// `2^{q_L} − n!` padding indices each carry their own tag.
fn oracle_gna_distance(g: &Graph) -> f64 {
    let n_fact = (1..=g.n() as u64).product::<u64>();
    let q_l = 64 - (n_fact - 1).leading_zeros() as u64;
    let big_n = 1u64 << q_l;
    let k = n_fact / oracle_automorphisms(g) + (big_n - n_fact);
    1.0 - k as f64 / big_n as f64
}

fn maximally_mixed_distance(rho: &DensityOperator) -> f64 {
    trace_distance(rho, &DensityOperator::maximally_mixed(rho.num_qubits())).unwrap()
}

fn bloch(rho: &DensityOperator) -> [f64; 3] {
    let m = rho.matrix();
    [
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ]
}

/// Qubit trace distance: half the Euclidean distance of Bloch vectors.
fn oracle_qubit_distance(a: &DensityOperator, b: &DensityOperator) -> f64 {
    let (x, y) = (bloch(a), bloch(b));
    (0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>().sqrt() / 2.0
}

/// Qubit fidelity: `F² = tr(ρσ) + 2√(det ρ · det σ)`.
fn oracle_qubit_fidelity(a: &DensityOperator, b: &DensityOperator) -> f64 {
    let overlap = (a.matrix() * b.matrix()).trace().re;
    let det = |m: &DMatrix<Complex64>| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    (overlap + 2.0 * (det(a.matrix()) * det(b.matrix())).sqrt())
        .max(0.0)
        .sqrt()
}

// ---------------------------------------------------------- random circuits

fn random_gate(rng: &mut SeededRng, qubits: &[usize]) -> Gate {
    let q = qubits[rng.random_range(0..qubits.len())];
    let choice = rng.random_range(0..if qubits.len() > 1 { 7 } else { 6 });
    match choice {
        0 => Gate::H(q),
        1 => Gate::X(q),
        2 => Gate::S(q),
        3 => Gate::Sdg(q),
        4 => Gate::T(q),
        5 => Gate::Tdg(q),
        _ => {
            let mut t = qubits[rng.random_range(0..qubits.len())];
            while t == q {
                t = qubits[rng.random_range(0..qubits.len())];
            }
            Gate::Cnot {
                control: q,
                target: t,
            }
        }
    }
}

/// Outputs `0..k` maximally entangled with workspace `k..2k`, then scrambled
/// by gates acting only within the outputs or only within the workspace, so
/// the output marginal stays exactly `I/2^k`.
fn random_yes_circuit(rng: &mut SeededRng) -> Circuit {
    let k = rng.random_range(1..=3usize);
    let extra = rng.random_range(0..=(6 - 2 * k));
    let width = 2 * k + extra;
    let mut gates = Vec::new();
    for j in 0..k {
        gates.push(Gate::H(j));
        gates.push(Gate::Cnot {
            control: j,
            target: k + j,
        });
    }
    let outputs: Vec<usize> = (0..k).collect();
    let workspace: Vec<usize> = (k..width).collect();
    for _ in 0..4 * width {
        let side = if rng.random_bool(0.5) {
            &outputs
        } else {
            &workspace
        };
        gates.push(random_gate(rng, side));
    }
    Circuit::new(width, k, gates).unwrap()
}

fn random_circuit(rng: &mut SeededRng, width: usize, k: usize) -> Circuit {
    let all: Vec<usize> = (0..width).collect();
    let gates = (0..5 * width).map(|_| random_gate(rng, &all)).collect();
    Circuit::new(width, k, gates).unwrap()
}

fn yes_circuits() -> Vec<Circuit> {
    (0..24)
        .map(|i| random_yes_circuit(&mut seeded(derive_seed(0x5e5, i))))
        .collect()
}

/// Random circuits kept only when clearly away from the maximally mixed
/// state, plus the trivial identity no-instance.
fn no_circuits() -> Vec<Circuit> {
    let mut out = vec![Circuit::identity(1, 1).unwrap()];
    let mut i = 0;
    while out.len() < 12 {
        let mut rng = seeded(derive_seed(0x90, i));
        i += 1;
        let width = rng.random_range(2..=4usize);
        let k = rng.random_range(1..width);
        let circ = random_circuit(&mut rng, width, k);
        if maximally_mixed_distance(&circ.output_state().unwrap()) >= 0.05 {
            out.push(circ);
        }
    }
    out
}

fn statprep(width: usize, q_out: usize, amplitudes: Vec<Complex64>) -> Circuit {
    let gate = Gate::StatePrep {
        targets: (0..width).collect(),
        amplitudes,
    };
    Circuit::new(width, q_out, vec![gate]).unwrap()
}

// ---------------------------------------------------------------- criteria

fn gna_dichotomy() -> Outcome {
    let start = Instant::now();
    let mut graphs = 0;
    for n in 1..=5 {
        for entry in ok(gna_sweep(n, Execution::default()))? {
            let g = &entry.graph;
            let aut = oracle_automorphisms(g);
            ensure!(
                entry.automorphisms == aut,
                "n={n} mask={}: |Aut| {} vs oracle {aut}",
                g.edge_mask(),
                entry.automorphisms
            );
            let d = entry.summary.distance;
            if aut == 1 {
                ensure!(
                    d == 0.0,
                    "rigid graph mask={} has distance {d}",
                    g.edge_mask()
                );
            } else {
                ensure!(
                    d >= 0.25,
                    "non-rigid graph mask={} has distance {d}",
                    g.edge_mask()
                );
            }
            ensure!(
                (d - oracle_gna_distance(g)).abs() <= 1e-12,
                "orbit formula mismatch at mask={}",
                g.edge_mask()
            );
            let eig = maximally_mixed_distance(&ok(gna_output_state(g))?);
            ensure!(
                (eig - d).abs() <= 1e-9,
                "eigen distance {eig} vs orbit {d} at n={n} mask={}",
                g.edge_mask()
            );
            graphs += 1;
        }
    }
    let text = ok(std::fs::read_to_string(fixture("rigid6.graph")))?;
    let rigid = ok(niqzk::files::parse_graph(&text))?;
    ensure!(
        Some(&rigid) == ok(find_rigid_graph(6))?.as_ref(),
        "fixture is not the lowest rigid 6-vertex graph"
    );
    ensure!(oracle_automorphisms(&rigid) == 1, "fixture is not rigid");
    let red = ok(gna_to_qsci(&rigid))?;
    let eig = maximally_mixed_distance(&red.output_state);
    ensure!(
        red.summary.distance == 0.0 && eig <= 1e-9,
        "rigid fixture distance {} / {eig}",
        red.summary.distance
    );
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{} graphs on n<=5 plus rigid fixture, {:.1}s",
        graphs + 1,
        elapsed.as_secs_f64()
    ))
}

fn gna_named_values() -> Outcome {
    let text = ok(std::fs::read_to_string(fixture("rigid6.graph")))?;
    let rigid = ok(niqzk::files::parse_graph(&text))?;
    let cases = [
        ("K3", Graph::complete(3)),
        ("P4", Graph::path(4)),
        ("rigid6", rigid),
    ];
    let mut parts = Vec::new();
    for (name, g) in cases {
        let expected = oracle_gna_distance(&g);
        let red = ok(gna_to_qsci(&g))?;
        let analytic = red.summary.distance;
        let eig = maximally_mixed_distance(&red.output_state);
        let decided = ok(distance_to_identity(&red.instance))?;
        ensure!(
            (analytic - expected).abs() <= 1e-9,
            "{name}: orbit {analytic} vs {expected}"
        );
        ensure!(
            (eig - expected).abs() <= 1e-9,
            "{name}: eigen {eig} vs {expected}"
        );
        ensure!(
            (decided - expected).abs() <= 1e-9,
            "{name}: instance {decided} vs {expected}"
        );
        if g.n() <= 4 {
            let circ = ok(gna_circuit(&g))?;
            let via = maximally_mixed_distance(&ok(circ.output_state())?);
            ensure!(
                (via - expected).abs() <= 1e-9,
                "{name}: circuit path {via} vs {expected}"
            );
        }
        parts.push(format!("{name}={expected}"));
    }
    let (k3, p4) = (
        oracle_gna_distance(&Graph::complete(3)),
        oracle_gna_distance(&Graph::path(4)),
    );
    ensure!(
        k3 == 5.0 / 8.0 && p4 == 3.0 / 8.0,
        "oracle disagrees with 5/8, 3/8"
    );
    Ok(parts.join(" "))
}

fn completeness() -> Outcome {
    let circuits = yes_circuits();
    let mut worst: f64 = 0.0;
    for (i, circ) in circuits.iter().enumerate() {
        let p = ok(build_qsci_verifier(circ))?;
        let prover = ok(honest_prover(&p))?;
        let acc = ok(acceptance_probability(p.spec(), &prover))?;
        ensure!(
            (acc - 1.0).abs() <= 1e-7,
            "instance {i} (q'={}): acceptance {acc}",
            circ.q_in()
        );
        worst = worst.max((acc - 1.0).abs());
    }
    Ok(format!(
        "{} yes-instances, max |acc-1| = {worst:.2e}",
        circuits.len()
    ))
}

fn soundness() -> Outcome {
    let circuits = no_circuits();
    let mut worst_gap: f64 = 0.0;
    for (i, circ) in circuits.iter().enumerate() {
        let p = ok(build_qsci_verifier(circ))?;
        ensure!(
            p.spec().prover_qubits() <= 6,
            "instance {i}: prover register too wide"
        );
        let bound = ok(optimal_cheat_bound(&p))?;
        let random = ok(random_prover_acceptances(
            p.spec(),
            500,
            derive_seed(11, i as u64),
            Execution::default(),
        ))?;
        let max_random = random.iter().cloned().fold(0.0, f64::max);
        ensure!(
            max_random <= bound + 1e-9,
            "instance {i}: random prover {max_random} above bound {bound}"
        );
        let search = ok(numeric_cheat_search(
            p.spec(),
            20,
            2000,
            derive_seed(12, i as u64),
            Execution::default(),
        ))?;
        ensure!(
            search.best_acceptance <= bound + 1e-9,
            "instance {i}: search {} above bound {bound}",
            search.best_acceptance
        );
        let gap = bound - search.best_acceptance;
        ensure!(
            gap <= 1e-3,
            "instance {i}: search {} short of bound {bound}",
            search.best_acceptance
        );
        worst_gap = worst_gap.max(gap);
    }
    Ok(format!(
        "{} no-instances, worst search gap {worst_gap:.2e}",
        circuits.len()
    ))
}

fn zero_knowledge() -> Outcome {
    let circuits = yes_circuits();
    let mut worst: f64 = 0.0;
    for (i, circ) in circuits.iter().enumerate() {
        let p = ok(build_qsci_verifier(circ))?;
        let prover = ok(honest_prover(&p))?;
        let d = ok(zk_audit(p.spec(), &prover, &ok(p.simulator())?))?;
        ensure!(d <= 1e-9, "instance {i}: view distance {d}");
        worst = worst.max(d);
    }
    Ok(format!(
        "{} yes-instances, max view distance {worst:.2e}",
        circuits.len()
    ))
}

/// Flag qubit 0 plus `k` shared qubits; identity verifier accepting only on
/// flag = 1, so every prover is rejected.
fn never_accepting(k: usize) -> ProtocolSpec {
    ProtocolSpec::new(
        1 + k,
        0,
        k,
        k,
        Circuit::identity(1 + k, 1).unwrap(),
        AcceptRule::OutputQubit(0),
    )
    .unwrap()
}

fn round_trip() -> Outcome {
    let mut yes_worst: f64 = 0.0;
    for (i, circ) in yes_circuits().iter().enumerate() {
        let p = ok(build_qsci_verifier(circ))?;
        let out = ok(protocol_to_qsci(p.spec(), &ok(p.simulator())?))?;
        let d = maximally_mixed_distance(&ok(out.source().output_state())?);
        ensure!(d < 1e-9, "yes-instance {i}: output distance {d}");
        yes_worst = yes_worst.max(d);
    }

    let mut fixtures: Vec<(String, ProtocolSpec, SimulatorState)> = Vec::new();
    for k in 1..=3 {
        fixtures.push((
            format!("reject k={k} S=0"),
            never_accepting(k),
            SimulatorState(DensityOperator::basis(1 + k, 0)),
        ));
    }
    for k in 2..=3 {
        let ones = (1 << k) - 1;
        fixtures.push((
            format!("reject k={k} S=1^k"),
            never_accepting(k),
            SimulatorState(DensityOperator::basis(1 + k, ones)),
        ));
    }
    let epr = ok(build_qsci_verifier(
        &Circuit::new(
            2,
            1,
            vec![
                Gate::H(0),
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
        )
        .unwrap(),
    ))?;
    let flagged = DensityOperator::basis(1, 1).tensor(&DensityOperator::maximally_mixed(2));
    fixtures.push((
        "flagged simulator".into(),
        epr.spec().clone(),
        SimulatorState(flagged),
    ));
    let ident = ok(build_qsci_verifier(&Circuit::identity(1, 1).unwrap()))?;
    fixtures.push((
        "identity no-instance".into(),
        ident.spec().clone(),
        ok(ident.simulator())?,
    ));

    let mut no_min = f64::INFINITY;
    for (name, spec, sim) in &fixtures {
        let out = ok(protocol_to_qsci(spec, sim))?;
        let d = maximally_mixed_distance(&ok(out.source().output_state())?);
        ensure!(d >= 0.2, "{name}: output distance {d} below 1/5");
        no_min = no_min.min(d);
    }

    let counter = ok(protocol_to_qsci(
        &never_accepting(1),
        &SimulatorState(DensityOperator::basis(2, 1)),
    ))?;
    let d = maximally_mixed_distance(&ok(counter.source().output_state())?);
    println!("note  round trip: with one shared pair, a rejecting verifier and S=|1> give output distance {d:.1e} (no separation)");
    Ok(format!(
        "yes max {yes_worst:.2e}, {} no-fixtures min {no_min:.4}",
        fixtures.len()
    ))
}

fn amplification() -> Outcome {
    let d02 = statprep(
        2,
        1,
        vec![
            c(0.7f64.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.3f64.sqrt(), 0.0),
        ],
    );
    let cases = [(0.2, d02), (0.5, Circuit::identity(1, 1).unwrap())];
    let mut checked = 0;
    for (d, circ) in cases {
        let inst = ok(QsciInstance::new(0.0, d, StateSource::Circuit(circ)))?;
        let measured = ok(distance_to_identity(&inst))?;
        ensure!(
            (measured - d).abs() <= 1e-9,
            "base distance {measured} != {d}"
        );
        for r in 2..=4 {
            let amp = ok(distance_to_identity(&ok(amplify(&inst, r))?))?;
            let bound = 1.0 - (1.0 - d * d).powf(r as f64 / 2.0);
            ensure!(
                (bound - amplified_distance_bound(d, r)).abs() <= 1e-15,
                "bound formula mismatch"
            );
            ensure!(amp >= bound - 1e-9, "d={d} r={r}: {amp} below {bound}");
            checked += 1;
        }
    }
    let epr = Circuit::new(
        2,
        1,
        vec![
            Gate::H(0),
            Gate::Cnot {
                control: 0,
                target: 1,
            },
        ],
    )
    .unwrap();
    let yes = ok(QsciInstance::new(0.0, 0.5, StateSource::Circuit(epr)))?;
    for r in 2..=4 {
        let amp = ok(distance_to_identity(&ok(amplify(&yes, r))?))?;
        ensure!(amp == 0.0, "d=0 instance drifted to {amp} at r={r}");
    }
    Ok(format!("{checked} (d, r) pairs above bound, d=0 stays 0"))
}

fn bqp() -> Outcome {
    let mut instances = Vec::new();
    for p in [0.0f64, 1.0 / 3.0, 2.0 / 3.0, 1.0] {
        let circ = statprep(1, 1, vec![c((1.0 - p).sqrt(), 0.0), c(p.sqrt(), 0.0)]);
        // Exact acceptance from the state vector.
        let psi = ok(circ.evaluate_pure())?;
        let exact_p = psi.amplitudes()[1].norm_sqr();
        let red = ok(bqp_to_1qsci(&circ, 0, 1))?;
        let d = ok(distance_to_identity(&red.instance))?;
        ensure!(
            (d - (1.0 - exact_p) / 2.0).abs() <= 1e-9,
            "p={p}: distance {d}"
        );
        instances.push(red.instance);
    }
    let mut disagreements = 0;
    for run in 0..200u64 {
        let inst = &instances[run as usize % instances.len()];
        let mut rng = seeded(derive_seed(0xb9, run));
        let exact = ok(decide_1qsci(inst, Tomography::Exact, &mut rng))?;
        let sampled = ok(decide_1qsci(inst, Tomography::Sampled(10_000), &mut rng))?;
        disagreements += usize::from(exact.kind != sampled.kind);
    }
    ensure!(
        disagreements <= 1,
        "{disagreements} sampled/exact disagreements"
    );
    Ok(format!(
        "4 circuits exact, {disagreements}/200 sampled disagreements"
    ))
}

fn partial(rho: &DensityOperator, keep: usize) -> DensityOperator {
    rho.partial_trace(&(0..keep).collect::<Vec<_>>()).unwrap()
}

fn metrology_instance(seed: u64) -> Result<(), String> {
    let mut rng = seeded(seed);
    let n = rng.random_range(1..=4usize);
    let mut rank = || rng.random_range(1..=(1usize << n));
    let (r1, r2, r3) = (rank(), rank(), rank());
    let rho = random_density(n, r1, &mut rng);
    let sigma = random_density(n, r2, &mut rng);
    let tau = random_density(n, r3, &mut rng);
    let td = |a: &DensityOperator, b: &DensityOperator| trace_distance(a, b).unwrap();
    let fi = |a: &DensityOperator, b: &DensityOperator| fidelity(a, b).unwrap();

    // Metric axioms.
    let d_rs = td(&rho, &sigma);
    ensure!(td(&rho, &rho) <= 1e-9, "D(rho, rho) != 0");
    ensure!((0.0..=1.0 + 1e-9).contains(&d_rs), "D out of range: {d_rs}");
    ensure!((d_rs - td(&sigma, &rho)).abs() <= 1e-9, "D not symmetric");
    ensure!(
        td(&rho, &tau) <= d_rs + td(&sigma, &tau) + 1e-9,
        "triangle inequality fails"
    );
    let f_rs = fi(&rho, &sigma);
    ensure!(
        (fi(&rho, &rho) - 1.0).abs() <= 1e-7,
        "F(rho, rho) = {}",
        fi(&rho, &rho)
    );
    ensure!((0.0..=1.0 + 1e-9).contains(&f_rs), "F out of range: {f_rs}");
    ensure!((f_rs - fi(&sigma, &rho)).abs() <= 1e-7, "F not symmetric");

    // Qubit closed forms.
    if n == 1 {
        ensure!(
            (d_rs - oracle_qubit_distance(&rho, &sigma)).abs() <= 1e-9,
            "qubit D vs Bloch oracle"
        );
        ensure!(
            (f_rs - oracle_qubit_fidelity(&rho, &sigma)).abs() <= 1e-7,
            "qubit F vs closed form"
        );
    }

    // Unitary invariance.
    let u = haar_unitary(1 << n, &mut rng);
    let (ur, us) = (ok(rho.conjugate(&u))?, ok(sigma.conjugate(&u))?);
    ensure!(
        (td(&ur, &us) - d_rs).abs() <= 1e-9,
        "D not unitarily invariant"
    );
    ensure!(
        (fi(&ur, &us) - f_rs).abs() <= 1e-7,
        "F not unitarily invariant"
    );

    // Monotonicity under partial trace.
    if n >= 2 {
        let keep = rng.random_range(1..n);
        let (pr, ps) = (partial(&rho, keep), partial(&sigma, keep));
        ensure!(
            td(&pr, &ps) <= d_rs + 1e-9,
            "D increased under partial trace"
        );
        ensure!(
            fi(&pr, &ps) >= f_rs - 1e-7,
            "F decreased under partial trace"
        );
    }

    // Fuchs–van de Graaf.
    ensure!(1.0 - f_rs <= d_rs + 1e-7, "1 - F > D");
    ensure!(
        d_rs <= (1.0 - f_rs * f_rs).max(0.0).sqrt() + 1e-7,
        "D > sqrt(1 - F^2)"
    );

    // Pure states: F = |<psi|phi>| and D = sqrt(1 - F^2) exactly.
    let (a, b) = (
        random_pure_state(n, &mut rng),
        random_pure_state(n, &mut rng),
    );
    let overlap: f64 = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes().iter())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm();
    let (da, db) = (a.density(), b.density());
    ensure!((fi(&da, &db) - overlap).abs() <= 1e-7, "pure F vs overlap");
    ensure!(
        (td(&da, &db) - (1.0 - overlap * overlap).max(0.0).sqrt()).abs() <= 1e-7,
        "pure D vs overlap"
    );

    // Multiplicativity on a split with at most four qubits in total.
    if n >= 2 {
        let m = rng.random_range(1..n);
        let (a1, a2) = (
            random_density(m, 1 << m, &mut rng),
            random_density(n - m, 1 << (n - m), &mut rng),
        );
        let (b1, b2) = (
            random_density(m, 1, &mut rng),
            random_density(n - m, 2, &mut rng),
        );
        let joint = fi(&a1.tensor(&a2), &b1.tensor(&b2));
        ensure!(
            (joint - fi(&a1, &b1) * fi(&a2, &b2)).abs() <= 1e-7,
            "F not multiplicative"
        );
    }

    // Uhlmann contract on purifications of a state on at most two qubits.
    let p = n.min(2);
    let base = random_density(p, rng.random_range(1..=(1usize << p)), &mut rng);
    let phi = purify(&base);
    let pivot: Vec<usize> = (0..p).collect();
    ensure!(
        ok(phi.reduced(&pivot))?.max_abs_diff(&base) <= 1e-9,
        "purification marginal"
    );
    let v = haar_unitary(1 << p, &mut rng);
    let others: Vec<usize> = (p..2 * p).collect();
    let psi = ok(phi.apply_unitary(&v, &others))?;
    let w = ok(uhlmann_unitary(&phi, &psi, &pivot))?;
    let mapped = ok(phi.apply_unitary(&w, &others))?;
    ensure!(
        mapped.equal_up_to_phase(&psi, 1e-7),
        "Uhlmann unitary misses target"
    );
    let far = PureState::basis(2 * p, 0);
    if td(&far.reduced(&pivot).unwrap(), &base) > 1e-3 {
        ensure!(
            uhlmann_unitary(&phi, &far, &pivot).is_err(),
            "Uhlmann accepted mismatched marginals"
        );
    }
    Ok(())
}

fn metrology() -> Outcome {
    let start = Instant::now();
    let failures: Vec<String> = niqzk::par::map_indexed(Execution::default(), 1000, |i| {
        metrology_instance(derive_seed(0x3e7, i as u64))
            .err()
            .map(|e| format!("instance {i}: {e}"))
    })
    .into_iter()
    .flatten()
    .collect();
    ensure!(
        failures.is_empty(),
        "{} failures, first: {}",
        failures.len(),
        failures[0]
    );
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("1000 instances, {:.1}s", elapsed.as_secs_f64()))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        files.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&path).unwrap(),
        );
    }
    files
}

fn cli_pass(dir: &Path) -> Result<CliRun, String> {
    let f = |name: &str| fixture(name).to_string_lossy().into_owned();
    let o = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let commands: Vec<Vec<String>> = vec![
        vec!["decide".into(), f("epr.inst"), "--exact".into()],
        vec!["decide".into(), f("k3.inst")],
        vec![
            "decide".into(),
            f("identity.inst"),
            "--sampled".into(),
            "3000".into(),
            "--seed".into(),
            "7".into(),
        ],
        vec![
            "decide".into(),
            f("flip.qsd"),
            "--sampled".into(),
            "6000".into(),
            "--seed".into(),
            "3".into(),
        ],
        vec![
            "reduce".into(),
            "gna".into(),
            f("k3.graph"),
            "-o".into(),
            o("k3red.inst"),
        ],
        vec![
            "reduce".into(),
            "gna".into(),
            f("rigid6.graph"),
            "-o".into(),
            o("rigid.inst"),
        ],
        vec![
            "reduce".into(),
            "amplify".into(),
            f("identity.inst"),
            "--copies".into(),
            "3".into(),
            "-o".into(),
            o("amp.inst"),
        ],
        vec![
            "reduce".into(),
            "bqp".into(),
            f("always_accept.circuit"),
            "--copies".into(),
            "3".into(),
            "-o".into(),
            o("bqp.inst"),
        ],
        vec![
            "reduce".into(),
            "protocol".into(),
            f("epr.protocol"),
            "-o".into(),
            o("proto.inst"),
        ],
        vec!["protocol".into(), "run".into(), f("epr.protocol")],
        vec!["protocol".into(), "zk".into(), f("epr.protocol")],
        vec![
            "protocol".into(),
            "cheat".into(),
            f("identity.protocol"),
            "--seed".into(),
            "5".into(),
            "--restarts".into(),
            "4".into(),
            "--iters".into(),
            "300".into(),
        ],
    ];
    let mut stdouts = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let out = Command::new(env!("CARGO_BIN_EXE_niqzk"))
            .arg("--json")
            .arg(o(&format!("report{i}.json")))
            .args(args)
            .env_remove("NIQZK_DIM_CAP")
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            matches!(out.status.code(), Some(0 | 1)),
            "`{}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        stdouts.push(out.stdout);
    }
    Ok((stdouts, snapshot(dir)))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (out1, files1) = cli_pass(dir.path())?;
    for name in files1.keys() {
        std::fs::remove_file(dir.path().join(name)).map_err(|e| e.to_string())?;
    }
    let (out2, files2) = cli_pass(dir.path())?;
    for (i, (a, b)) in out1.iter().zip(&out2).enumerate() {
        ensure!(a == b, "command {i}: stdout differs between runs");
    }
    ensure!(files1.keys().eq(files2.keys()), "different files written");
    for (name, bytes) in &files1 {
        ensure!(files2[name] == *bytes, "{name} differs between runs");
    }
    Ok(format!(
        "{} commands, {} files byte-identical",
        out1.len(),
        files1.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gna dichotomy", gna_dichotomy),
        ("gna named values", gna_named_values),
        ("honest completeness", completeness),
        ("soundness dominance", soundness),
        ("perfect zero knowledge", zero_knowledge),
        ("protocol-to-instance round trip", round_trip),
        ("amplification", amplification),
        ("bqp reduction", bqp),
        ("qcore metrology", metrology),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
