//! Non-interactive proof systems with shared EPR pairs.
//!
//! The global register is laid out as `V ⊗ M ⊗ P` with
//! `V = V_S̄ ⊗ S` (verifier private qubits, then the verifier halves of the
//! EPR pairs) and `P = P_S̄ ⊗ P_S` (prover private qubits, then the prover
//! halves). Pair `i` joins `S[i]` and `P_S[i]`. The prover applies a
//! unitary to `M ⊗ P`, then the verifier applies its circuit to `V ⊗ M`
//! and the acceptance rule is evaluated as an exact probability.

mod qsci;
mod search;

use nalgebra::DMatrix;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::qcore::{
    check_cap, is_unitary, qubit_mask, trace_distance, DensityOperator, PureState, C64,
    EPS_ALGEBRAIC,
};

pub use qsci::{
    build_qsci_verifier, build_qsci_verifier_with_workspace, honest_prover, optimal_cheat_bound,
    QsciProtocol,
};
pub use search::{numeric_cheat_search, random_prover_acceptances, CheatSearch, MAX_SEARCH_QUBITS};

/// When the verifier accepts, measured after its circuit has run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AcceptRule {
    /// The designated output qubit (an index inside `V`) reads 1.
    OutputQubit(usize),
    /// All listed qubits (indices inside `V ⊗ M`) read 0.
    AllZero(Vec<usize>),
}

impl AcceptRule {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            AcceptRule::OutputQubit(q) => vec![*q],
            AcceptRule::AllZero(qs) => qs.clone(),
        }
    }

    /// Whether the measured bits of [`qubits`](Self::qubits) mean accept.
    pub fn accepts(&self, outcome: usize) -> bool {
        match self {
            AcceptRule::OutputQubit(_) => outcome == 1,
            AcceptRule::AllZero(_) => outcome == 0,
        }
    }

    /// Accepting outcomes as a list.
    pub fn accepting_outcomes(&self) -> Vec<usize> {
        match self {
            AcceptRule::OutputQubit(_) => vec![1],
            AcceptRule::AllZero(_) => vec![0],
        }
    }

    fn is_accepting_index(&self, width: usize, idx: usize) -> bool {
        match self {
            AcceptRule::OutputQubit(q) => idx & qubit_mask(width, *q) != 0,
            AcceptRule::AllZero(qs) => qs.iter().all(|&q| idx & qubit_mask(width, q) == 0),
        }
    }
}

/// Register sizes, verifier circuit and acceptance rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    q_v: usize,
    q_m: usize,
    q_p: usize,
    q_s: usize,
    verifier: Circuit,
    accept: AcceptRule,
}

impl ProtocolSpec {
    pub fn new(
        q_v: usize,
        q_m: usize,
        q_p: usize,
        q_s: usize,
        verifier: Circuit,
        accept: AcceptRule,
    ) -> Result<Self> {
        if q_s > q_v.min(q_p) {
            return Err(Error::InvalidProtocol(format!(
                "{q_s} shared pairs exceed min(q_V = {q_v}, q_P = {q_p})"
            )));
        }
        if verifier.q_in() != q_v + q_m {
            return Err(Error::InvalidProtocol(format!(
                "verifier acts on {} qubits, expected q_V + q_M = {}",
                verifier.q_in(),
                q_v + q_m
            )));
        }
        if verifier.has_state_prep() {
            return Err(Error::InvalidProtocol(
                "verifier circuit must be unitary".into(),
            ));
        }
        match &accept {
            AcceptRule::OutputQubit(q) if *q >= q_v => {
                return Err(Error::InvalidProtocol(format!(
                    "output qubit {q} is not a verifier qubit (q_V = {q_v})"
                )))
            }
            AcceptRule::AllZero(qs) if qs.iter().any(|&q| q >= q_v + q_m) => {
                return Err(Error::InvalidProtocol(
                    "acceptance qubits outside V ⊗ M".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            q_v,
            q_m,
            q_p,
            q_s,
            verifier,
            accept,
        })
    }

    pub fn q_v(&self) -> usize {
        self.q_v
    }
    pub fn q_m(&self) -> usize {
        self.q_m
    }
    pub fn q_p(&self) -> usize {
        self.q_p
    }
    pub fn q_s(&self) -> usize {
        self.q_s
    }
    pub fn verifier(&self) -> &Circuit {
        &self.verifier
    }
    pub fn accept_rule(&self) -> &AcceptRule {
        &self.accept
    }

    pub fn total_qubits(&self) -> usize {
        self.q_v + self.q_m + self.q_p
    }

    /// Width of `V ⊗ M`, the verifier's view.
    pub fn view_qubits(&self) -> usize {
        self.q_v + self.q_m
    }

    /// Width of `M ⊗ P`, where the prover acts.
    pub fn prover_qubits(&self) -> usize {
        self.q_m + self.q_p
    }

    /// `V_S̄`: verifier private qubits.
    pub fn verifier_private(&self) -> Vec<usize> {
        (0..self.q_v - self.q_s).collect()
    }

    /// `S`: verifier halves of the EPR pairs.
    pub fn shared(&self) -> Vec<usize> {
        (self.q_v - self.q_s..self.q_v).collect()
    }

    pub fn message(&self) -> Vec<usize> {
        (self.q_v..self.q_v + self.q_m).collect()
    }

    /// `M ⊗ P` in ascending order.
    pub fn prover_register(&self) -> Vec<usize> {
        (self.q_v..self.total_qubits()).collect()
    }

    /// `P_S`: prover halves of the EPR pairs.
    pub fn prover_shared(&self) -> Vec<usize> {
        let t = self.total_qubits();
        (t - self.q_s..t).collect()
    }
}

/// A unitary on `M ⊗ P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProverStrategy {
    unitary: DMatrix<C64>,
}

impl ProverStrategy {
    pub fn new(unitary: DMatrix<C64>) -> Result<Self> {
        if !unitary.nrows().is_power_of_two() || !is_unitary(&unitary, EPS_ALGEBRAIC) {
            return Err(Error::InvalidProtocol(
                "prover strategy is not unitary".into(),
            ));
        }
        Ok(Self { unitary })
    }

    pub(crate) fn from_unitary_unchecked(unitary: DMatrix<C64>) -> Self {
        Self { unitary }
    }

    pub fn identity(spec: &ProtocolSpec) -> Self {
        let d = 1usize << spec.prover_qubits();
        Self {
            unitary: DMatrix::identity(d, d),
        }
    }

    pub fn unitary(&self) -> &DMatrix<C64> {
        &self.unitary
    }

    fn check(&self, spec: &ProtocolSpec) -> Result<()> {
        let want = spec.prover_qubits();
        let found = self.unitary.nrows().trailing_zeros() as usize;
        if want != found {
            return Err(Error::DimensionMismatch {
                expected: want,
                found,
            });
        }
        Ok(())
    }
}

/// A candidate simulator output on `V ⊗ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorState(pub DensityOperator);

impl SimulatorState {
    pub fn state(&self) -> &DensityOperator {
        &self.0
    }
}

/// `|ψ_init⟩`: zeros on `V_S̄`, `M`, `P_S̄` and EPR pairs across `S` / `P_S`.
pub fn initial_state(spec: &ProtocolSpec) -> Result<PureState> {
    let n = spec.total_qubits();
    check_cap(n)?;
    let k = spec.q_s;
    let amp = C64::new(0.5f64.powf(k as f64 / 2.0), 0.0);
    let s = spec.shared();
    let ps = spec.prover_shared();
    let mut v = nalgebra::DVector::zeros(1 << n);
    for x in 0..1usize << k {
        let mut idx = 0;
        for bit in 0..k {
            if x >> (k - 1 - bit) & 1 == 1 {
                idx |= qubit_mask(n, s[bit]) | qubit_mask(n, ps[bit]);
            }
        }
        v[idx] = amp;
    }
    Ok(PureState::from_vec_unchecked(v))
}

/// `(I_V ⊗ P)|ψ_init⟩`.
pub fn post_prover_state(spec: &ProtocolSpec, prover: &ProverStrategy) -> Result<PureState> {
    prover.check(spec)?;
    let init = initial_state(spec)?;
    init.apply_unitary(prover.unitary(), &spec.prover_register())
}

/// Probability that the verifier accepts after the prover then the verifier act.
pub fn acceptance_probability(spec: &ProtocolSpec, prover: &ProverStrategy) -> Result<f64> {
    let mut psi = post_prover_state(spec, prover)?;
    spec.verifier.apply_to(&mut psi)?;
    let n = psi.num_qubits();
    let rule = &spec.accept;
    let p: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(idx, _)| rule.is_accepting_index(n, *idx))
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// `tr_P` of the post-prover, pre-verifier state.
pub fn verifier_view(spec: &ProtocolSpec, prover: &ProverStrategy) -> Result<DensityOperator> {
    let psi = post_prover_state(spec, prover)?;
    let keep: Vec<usize> = (0..spec.view_qubits()).collect();
    psi.reduced(&keep)
}

/// Trace distance between a simulator state and the verifier's actual view;
/// perfect zero knowledge means this is 0 (within 1e-9).
pub fn zk_audit(spec: &ProtocolSpec, prover: &ProverStrategy, sim: &SimulatorState) -> Result<f64> {
    let view = verifier_view(spec, prover)?;
    trace_distance(sim.state(), &view)
}

/// Acceptance probability of `verifier` run directly on a simulator state,
/// as in the no-setup decision procedure (no shared pairs).
pub fn decide_via_simulator(
    verifier: &Circuit,
    accept: &AcceptRule,
    sim: &SimulatorState,
) -> Result<f64> {
    let rho = sim.state();
    if rho.num_qubits() != verifier.q_in() {
        return Err(Error::DimensionMismatch {
            expected: verifier.q_in(),
            found: rho.num_qubits(),
        });
    }
    let u = verifier.unitary()?;
    let after = rho.conjugate(&u)?;
    let n = after.num_qubits();
    let p: f64 = (0..after.dim())
        .filter(|&idx| accept.is_accepting_index(n, idx))
        .map(|idx| after.matrix()[(idx, idx)].re)
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Completeness and soundness acceptance levels of a proof system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolBounds {
    pub completeness: f64,
    pub soundness: f64,
}

impl ProtocolBounds {
    /// Perfect completeness, soundness 1/2.
    pub const PERFECT_HALF: Self = Self {
        completeness: 1.0,
        soundness: 0.5,
    };
    /// The bounds used for the no-setup simulation argument.
    pub const NO_SETUP: Self = Self {
        completeness: 0.75,
        soundness: 0.25,
    };

    /// Midpoint used to turn a simulated acceptance probability into a decision.
    pub fn decision_threshold(&self) -> f64 {
        (self.completeness + self.soundness) / 2.0
    }
}
