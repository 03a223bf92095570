//! Promise problems about circuit output states, with exact deciders used
//! as ground truth and a sampled single-qubit tomography decider.

mod graph;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::channel::Channel;
use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::qcore::{trace_distance, DensityOperator, EPS_ALGEBRAIC};

pub use graph::{
    apply_permutation, automorphism_count, factorial, find_rigid_graph, permutations_lex,
    vertex_pairs, Graph, Permutation, MAX_BRUTE_FORCE_VERTICES,
};

/// Where an instance's output state comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    Circuit(Circuit),
    Channel(Channel),
    /// A precomputed output state, for instances whose preparation is too
    /// wide to simulate densely.
    State(DensityOperator),
}

impl StateSource {
    pub fn output_qubits(&self) -> usize {
        match self {
            StateSource::Circuit(c) => c.q_out(),
            StateSource::Channel(ch) => ch.output_qubits(),
            StateSource::State(rho) => rho.num_qubits(),
        }
    }

    pub fn output_state(&self) -> Result<DensityOperator> {
        match self {
            StateSource::Circuit(c) => c.output_state(),
            StateSource::Channel(ch) => ch.output(),
            StateSource::State(rho) => Ok(rho.clone()),
        }
    }
}

fn check_thresholds(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0 <= alpha && alpha < beta && beta <= 1.0) {
        return Err(Error::InvalidInstance(format!(
            "thresholds must satisfy 0 <= alpha < beta <= 1, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

/// `(α, β)`-closeness of an output state to the maximally mixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct QsciInstance {
    alpha: f64,
    beta: f64,
    source: StateSource,
}

impl QsciInstance {
    pub fn new(alpha: f64, beta: f64, source: StateSource) -> Result<Self> {
        check_thresholds(alpha, beta)?;
        Ok(Self {
            alpha,
            beta,
            source,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn source(&self) -> &StateSource {
        &self.source
    }

    pub fn output_qubits(&self) -> usize {
        self.source.output_qubits()
    }
}

/// `(α, β)`-distinguishability of two output states of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct QsdInstance {
    alpha: f64,
    beta: f64,
    first: StateSource,
    second: StateSource,
}

impl QsdInstance {
    pub fn new(alpha: f64, beta: f64, first: StateSource, second: StateSource) -> Result<Self> {
        check_thresholds(alpha, beta)?;
        if first.output_qubits() != second.output_qubits() {
            return Err(Error::InvalidInstance(format!(
                "output widths differ: {} and {}",
                first.output_qubits(),
                second.output_qubits()
            )));
        }
        Ok(Self {
            alpha,
            beta,
            first,
            second,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sources(&self) -> (&StateSource, &StateSource) {
        (&self.first, &self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Accept,
    Reject,
    PromiseViolated,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Accept => "accept",
            VerdictKind::Reject => "reject",
            VerdictKind::PromiseViolated => "promise-violated",
        }
    }
}

/// A decision together with the distance it was based on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: f64,
}

/// Distance from the output state to `I / 2^{q_out}`.
pub fn distance_to_identity(inst: &QsciInstance) -> Result<f64> {
    let rho = inst.source.output_state()?;
    trace_distance(&rho, &DensityOperator::maximally_mixed(rho.num_qubits()))
}

/// Threshold comparison for a "near is yes" problem. Boundaries are
/// inclusive and tolerate 1e-9 of rounding.
pub fn classify_near(distance: f64, alpha: f64, beta: f64) -> VerdictKind {
    if distance <= alpha + EPS_ALGEBRAIC {
        VerdictKind::Accept
    } else if distance >= beta - EPS_ALGEBRAIC {
        VerdictKind::Reject
    } else {
        VerdictKind::PromiseViolated
    }
}

/// Threshold comparison for a "far is yes" problem.
pub fn classify_far(distance: f64, alpha: f64, beta: f64) -> VerdictKind {
    if distance >= beta - EPS_ALGEBRAIC {
        VerdictKind::Accept
    } else if distance <= alpha + EPS_ALGEBRAIC {
        VerdictKind::Reject
    } else {
        VerdictKind::PromiseViolated
    }
}

pub fn decide_qsci(inst: &QsciInstance) -> Result<Verdict> {
    let d = distance_to_identity(inst)?;
    Ok(Verdict {
        kind: classify_near(d, inst.alpha, inst.beta),
        witness: d,
    })
}

pub fn qsd_distance(inst: &QsdInstance) -> Result<f64> {
    let r0 = inst.first.output_state()?;
    let r1 = inst.second.output_state()?;
    trace_distance(&r0, &r1)
}

/// Accepts when the two output states are far apart.
pub fn decide_qsd(inst: &QsdInstance) -> Result<Verdict> {
    let d = qsd_distance(inst)?;
    Ok(Verdict {
        kind: classify_far(d, inst.alpha, inst.beta),
        witness: d,
    })
}

/// How the single-qubit deciders learn the output state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tomography {
    /// Read the exact reduced state.
    Exact,
    /// Pauli-basis measurements on this many fresh copies in total.
    Sampled(usize),
}

/// Bloch vector `(x, y, z)` of a single-qubit state.
pub fn bloch_vector(rho: &DensityOperator) -> [f64; 3] {
    let m = rho.matrix();
    [
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ]
}

/// Estimates the Bloch vector from `trials` single-copy Pauli measurements,
/// split evenly over X, Y and Z (the first axes take the remainder).
pub fn sample_bloch_vector<R: Rng + ?Sized>(
    rho: &DensityOperator,
    trials: usize,
    rng: &mut R,
) -> [f64; 3] {
    let exact = bloch_vector(rho);
    let mut out = [0.0; 3];
    for (axis, value) in exact.iter().enumerate() {
        let shots = trials / 3 + usize::from(axis < trials % 3);
        if shots == 0 {
            continue;
        }
        let p_plus = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
        let plus = Binomial::new(shots as u64, p_plus)
            .expect("valid binomial")
            .sample(rng);
        out[axis] = 2.0 * plus as f64 / shots as f64 - 1.0;
    }
    out
}

fn norm3(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn single_qubit_state(source: &StateSource) -> Result<DensityOperator> {
    if source.output_qubits() != 1 {
        return Err(Error::InvalidInstance(format!(
            "single-qubit problem needs exactly one output qubit, found {}",
            source.output_qubits()
        )));
    }
    source.output_state()
}

/// Upper bound on the sampled 1QSCI decider's error probability: each axis
/// estimate is within `(β−α)/√3` except with probability
/// `2·exp(−m(β−α)²/6)` by Hoeffding, `m = ⌊trials/3⌋`, union over 3 axes.
pub fn one_qsci_error_bound(trials: usize, alpha: f64, beta: f64) -> f64 {
    let m = (trials / 3) as f64;
    (6.0 * (-m * (beta - alpha).powi(2) / 6.0).exp()).min(1.0)
}

/// Same for the 1QSD decider: per-axis tolerance `(β−α)/(2√3)` on each of the
/// two states with `m = ⌊trials/6⌋` shots per axis, union over 6 axes.
pub fn one_qsd_error_bound(trials: usize, alpha: f64, beta: f64) -> f64 {
    let m = (trials / 6) as f64;
    (12.0 * (-m * (beta - alpha).powi(2) / 24.0).exp()).min(1.0)
}

/// BQP-style decider for single-qubit closeness to `I/2`: compares the
/// (exact or estimated) distance with the midpoint `(α+β)/2`. It always
/// answers Accept or Reject.
pub fn decide_1qsci<R: Rng + ?Sized>(
    inst: &QsciInstance,
    tomography: Tomography,
    rng: &mut R,
) -> Result<Verdict> {
    let rho = single_qubit_state(&inst.source)?;
    let bloch = match tomography {
        Tomography::Exact => bloch_vector(&rho),
        Tomography::Sampled(trials) => sample_bloch_vector(&rho, trials, rng),
    };
    let d = norm3(bloch) / 2.0;
    let mid = (inst.alpha + inst.beta) / 2.0;
    Ok(Verdict {
        kind: if d <= mid {
            VerdictKind::Accept
        } else {
            VerdictKind::Reject
        },
        witness: d,
    })
}

/// BQP-style decider for single-qubit distinguishability; trials are split
/// evenly between the two states.
pub fn decide_1qsd<R: Rng + ?Sized>(
    inst: &QsdInstance,
    tomography: Tomography,
    rng: &mut R,
) -> Result<Verdict> {
    let r0 = single_qubit_state(&inst.first)?;
    let r1 = single_qubit_state(&inst.second)?;
    let (b0, b1) = match tomography {
        Tomography::Exact => (bloch_vector(&r0), bloch_vector(&r1)),
        Tomography::Sampled(trials) => {
            let half = trials / 2;
            (
                sample_bloch_vector(&r0, trials - half, rng),
                sample_bloch_vector(&r1, half, rng),
            )
        }
    };
    let d = norm3([b0[0] - b1[0], b0[1] - b1[1], b0[2] - b1[2]]) / 2.0;
    let mid = (inst.alpha + inst.beta) / 2.0;
    Ok(Verdict {
        kind: if d >= mid {
            VerdictKind::Accept
        } else {
            VerdictKind::Reject
        },
        witness: d,
    })
}
