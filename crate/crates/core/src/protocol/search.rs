//! Numerical search for the best cheating prover.
//!
//! Each restart starts from a Haar-random unitary on `M ⊗ P` and performs
//! exact coordinate ascent over Givens generators `X_ij`, `Y_ij`, `Z_ij`.
//! Along one generator the acceptance is a trigonometric polynomial of
//! degree 2 in the angle, so five evaluations determine it exactly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qcore::{c, check_cap, C64};
use crate::random::{derive_seed, haar_unitary, seeded};

use super::{initial_state, ProtocolSpec, ProverStrategy};

/// Largest prover register (`q_M + q_P`) the search accepts.
pub const MAX_SEARCH_QUBITS: usize = 8;

const GRID: usize = 720;

#[derive(Debug, Clone)]
pub struct CheatSearch {
    pub best_acceptance: f64,
    pub prover: ProverStrategy,
    /// Final acceptance reached by each restart, in restart order.
    pub restarts: Vec<f64>,
}

/// `⟨ψ|(V†ΠV ⊗ I_P)|ψ⟩` with the verifier's accepting projector precomputed.
struct Evaluator {
    accept_op: DMatrix<C64>,
    d_view: usize,
    d_p: usize,
    d_mp: usize,
    init: DVector<C64>,
}

impl Evaluator {
    fn new(spec: &ProtocolSpec) -> Result<Self> {
        check_cap(spec.total_qubits())?;
        let w = spec.view_qubits();
        let u = spec.verifier().unitary()?;
        let rule = spec.accept_rule();
        let mut pu = u.clone();
        for row in 0..pu.nrows() {
            if !rule.is_accepting_index(w, row) {
                pu.row_mut(row).fill(c(0.0, 0.0));
            }
        }
        Ok(Self {
            accept_op: u.adjoint() * pu,
            d_view: 1 << w,
            d_p: 1 << spec.q_p(),
            d_mp: 1 << spec.prover_qubits(),
            init: initial_state(spec)?.into_amplitudes(),
        })
    }

    fn acceptance(&self, psi: &DVector<C64>) -> f64 {
        let m = DMatrix::from_fn(self.d_view, self.d_p, |r, p| psi[r * self.d_p + p]);
        let am = &self.accept_op * &m;
        m.iter()
            .zip(am.iter())
            .map(|(x, y)| (x.conj() * y).re)
            .sum::<f64>()
    }

    fn apply_prover(&self, u: &DMatrix<C64>) -> DVector<C64> {
        let d_v = self.init.len() / self.d_mp;
        let mut out = DVector::zeros(self.init.len());
        for v in 0..d_v {
            let block = self.init.rows(v * self.d_mp, self.d_mp);
            out.rows_mut(v * self.d_mp, self.d_mp)
                .copy_from(&(u * block));
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Generator {
    X,
    Y,
    Z,
}

fn givens(g: Generator, t: f64) -> [[C64; 2]; 2] {
    let (s, co) = t.sin_cos();
    match g {
        Generator::X => [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]],
        Generator::Y => [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]],
        Generator::Z => [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]],
    }
}

/// Mixes entries `offset + i` and `offset + j` in every block of length `block`.
fn apply_pair(v: &mut [C64], block: usize, i: usize, j: usize, m: &[[C64; 2]; 2]) {
    for base in (0..v.len()).step_by(block) {
        let (a, b) = (v[base + i], v[base + j]);
        v[base + i] = m[0][0] * a + m[0][1] * b;
        v[base + j] = m[1][0] * a + m[1][1] * b;
    }
}

fn apply_rows(u: &mut DMatrix<C64>, i: usize, j: usize, m: &[[C64; 2]; 2]) {
    for col in 0..u.ncols() {
        let (a, b) = (u[(i, col)], u[(j, col)]);
        u[(i, col)] = m[0][0] * a + m[0][1] * b;
        u[(j, col)] = m[1][0] * a + m[1][1] * b;
    }
}

/// Coefficients `[a0, a1, b1, a2, b2]` of the degree-2 trig polynomial
/// through five equispaced samples.
fn fit_trig(samples: &[f64; 5]) -> [f64; 5] {
    let mut coef = [0.0; 5];
    for (k, &f) in samples.iter().enumerate() {
        let t = 2.0 * PI * k as f64 / 5.0;
        coef[0] += f / 5.0;
        coef[1] += 2.0 * f * t.cos() / 5.0;
        coef[2] += 2.0 * f * t.sin() / 5.0;
        coef[3] += 2.0 * f * (2.0 * t).cos() / 5.0;
        coef[4] += 2.0 * f * (2.0 * t).sin() / 5.0;
    }
    coef
}

fn trig_eval(k: &[f64; 5], t: f64) -> f64 {
    k[0] + k[1] * t.cos() + k[2] * t.sin() + k[3] * (2.0 * t).cos() + k[4] * (2.0 * t).sin()
}

fn trig_argmax(k: &[f64; 5]) -> f64 {
    let mut best_t = 0.0;
    let mut best = trig_eval(k, 0.0);
    for step in 1..GRID {
        let t = 2.0 * PI * step as f64 / GRID as f64;
        let f = trig_eval(k, t);
        if f > best {
            best = f;
            best_t = t;
        }
    }
    // Newton polish on the derivative.
    let mut t = best_t;
    for _ in 0..8 {
        let d1 = -k[1] * t.sin() + k[2] * t.cos() - 2.0 * k[3] * (2.0 * t).sin()
            + 2.0 * k[4] * (2.0 * t).cos();
        let d2 = -k[1] * t.cos()
            - k[2] * t.sin()
            - 4.0 * k[3] * (2.0 * t).cos()
            - 4.0 * k[4] * (2.0 * t).sin();
        if d2 >= 0.0 {
            break;
        }
        t -= d1 / d2;
    }
    if trig_eval(k, t) >= best {
        t
    } else {
        best_t
    }
}

fn single_restart(ev: &Evaluator, iterations: usize, seed: u64) -> (f64, DMatrix<C64>) {
    let mut rng = seeded(seed);
    let mut u = haar_unitary(ev.d_mp, &mut rng);
    let mut psi = ev.apply_prover(&u);
    let mut current = ev.acceptance(&psi);
    if ev.d_mp < 2 {
        return (current, u);
    }
    let mut trial = psi.clone();
    for _ in 0..iterations {
        let i = rng.random_range(0..ev.d_mp);
        let mut j = rng.random_range(0..ev.d_mp - 1);
        if j >= i {
            j += 1;
        }
        let g = match rng.random_range(0..3) {
            0 => Generator::X,
            1 => Generator::Y,
            _ => Generator::Z,
        };
        let mut samples = [current, 0.0, 0.0, 0.0, 0.0];
        for (k, slot) in samples.iter_mut().enumerate().skip(1) {
            trial.copy_from(&psi);
            let m = givens(g, 2.0 * PI * k as f64 / 5.0);
            apply_pair(trial.as_mut_slice(), ev.d_mp, i, j, &m);
            *slot = ev.acceptance(&trial);
        }
        let t = trig_argmax(&fit_trig(&samples));
        let m = givens(g, t);
        trial.copy_from(&psi);
        apply_pair(trial.as_mut_slice(), ev.d_mp, i, j, &m);
        let value = ev.acceptance(&trial);
        if value > current {
            std::mem::swap(&mut psi, &mut trial);
            apply_rows(&mut u, i, j, &m);
            current = value;
        }
    }
    (current, u)
}

/// Multi-restart coordinate ascent over prover unitaries. Restart `k` uses
/// seed `derive_seed(seed, k)`, so the result is independent of `exec`.
pub fn numeric_cheat_search(
    spec: &ProtocolSpec,
    restarts: usize,
    iterations: usize,
    seed: u64,
    exec: Execution,
) -> Result<CheatSearch> {
    if spec.prover_qubits() > MAX_SEARCH_QUBITS {
        return Err(Error::DimensionCap {
            requested: spec.prover_qubits(),
            cap: MAX_SEARCH_QUBITS,
        });
    }
    if restarts == 0 {
        return Err(Error::InvalidProtocol(
            "cheat search needs at least one restart".into(),
        ));
    }
    let ev = Evaluator::new(spec)?;
    let runs = par::map_indexed(exec, restarts, |k| {
        single_restart(&ev, iterations, derive_seed(seed, k as u64))
    });
    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = k;
        }
    }
    Ok(CheatSearch {
        best_acceptance: runs[best].0.clamp(0.0, 1.0),
        prover: ProverStrategy::from_unitary_unchecked(runs[best].1.clone()),
        restarts: runs.iter().map(|r| r.0).collect(),
    })
}

/// Acceptance probabilities of `count` Haar-random provers.
pub fn random_prover_acceptances(
    spec: &ProtocolSpec,
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let ev = Evaluator::new(spec)?;
    Ok(par::map_indexed(exec, count, |k| {
        let mut rng = seeded(derive_seed(seed, k as u64));
        let u = haar_unitary(ev.d_mp, &mut rng);
        ev.acceptance(&ev.apply_prover(&u)).clamp(0.0, 1.0)
    }))
}
