//! The perfect-completeness, perfect-zero-knowledge verifier for a QSCI
//! instance given as a circuit `R`.
//!
//! Layout for `R` with `q'` qubits and `k = q'_out` outputs:
//! `V = flag ⊗ S` with `S = 1..=k`, `M = k+1..=q'`, so `R`'s qubit `j`
//! sits at global position `1 + j`. The verifier undoes `R` on `S ⊗ M` and
//! accepts iff those qubits all read 0.

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::qcore::{
    fidelity_to_maximally_mixed, uhlmann::uhlmann_unitary_with_tolerance, DensityOperator,
    PureState,
};

use super::{AcceptRule, ProtocolSpec, ProverStrategy, SimulatorState};

/// Max-abs deviation of `R`'s output from `I/2^k` tolerated by the honest prover.
const YES_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct QsciProtocol {
    spec: ProtocolSpec,
    circuit: Circuit,
}

impl QsciProtocol {
    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    /// The instance circuit `R`.
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// `|0⟩⟨0|_flag ⊗ R|0⟩⟨0|R†`, computable without the prover.
    pub fn simulator(&self) -> Result<SimulatorState> {
        let flag = DensityOperator::basis(1, 0);
        let r = self.circuit.evaluate_pure()?.density();
        Ok(SimulatorState(flag.tensor(&r)))
    }
}

/// Builds the verifier with the default prover width `q_P = q'_out`.
pub fn build_qsci_verifier(circuit: &Circuit) -> Result<QsciProtocol> {
    build_qsci_verifier_with_workspace(circuit, circuit.q_out())
}

/// Builds the verifier with `q_p ≥ q'_out` prover qubits.
pub fn build_qsci_verifier_with_workspace(circuit: &Circuit, q_p: usize) -> Result<QsciProtocol> {
    let k = circuit.q_out();
    let q = circuit.q_in();
    if k == 0 {
        return Err(Error::InvalidProtocol(
            "instance circuit has no output qubits".into(),
        ));
    }
    if q_p < k {
        return Err(Error::InvalidProtocol(format!(
            "prover needs at least {k} qubits, got {q_p}"
        )));
    }
    let map: Vec<usize> = (0..q).map(|j| 1 + j).collect();
    let verifier = circuit.adjoint()?.embed(q + 1, 1, &map)?;
    let accept = AcceptRule::AllZero((1..=q).collect());
    let spec = ProtocolSpec::new(k + 1, q - k, q_p, k, verifier, accept)?;
    Ok(QsciProtocol {
        spec,
        circuit: circuit.clone(),
    })
}

/// The honest prover maps `|ψ_init⟩` to `|0⟩_flag ⊗ R|0⟩ ⊗ |0^{q_P}⟩`.
///
/// Exists exactly when `R`'s output is maximally mixed; otherwise the
/// deviation is reported as [`Error::NotYesInstance`].
pub fn honest_prover(protocol: &QsciProtocol) -> Result<ProverStrategy> {
    let spec = &protocol.spec;
    let out = protocol.circuit.output_state()?;
    let deviation = out.max_abs_diff(&DensityOperator::maximally_mixed(out.num_qubits()));
    if deviation > YES_TOLERANCE {
        return Err(Error::NotYesInstance { deviation });
    }
    let init = super::initial_state(spec)?;
    let target = PureState::zeros(1)
        .tensor(&protocol.circuit.evaluate_pure()?)
        .tensor(&PureState::zeros(spec.q_p()));
    let pivot: Vec<usize> = (0..spec.q_v()).collect();
    let u =
        uhlmann_unitary_with_tolerance(&init, &target, &pivot, YES_TOLERANCE).map_err(
            |e| match e {
                Error::NoUhlmannUnitary { deviation } => Error::NotYesInstance { deviation },
                other => other,
            },
        )?;
    Ok(ProverStrategy::from_unitary_unchecked(u))
}

/// Maximum acceptance over all provers (with `q_P ≥ q'_out`):
/// `F(ξ, I/2^k)²` where `ξ` is `R`'s output.
pub fn optimal_cheat_bound(protocol: &QsciProtocol) -> Result<f64> {
    let out = protocol.circuit.output_state()?;
    let f = fidelity_to_maximally_mixed(&out);
    Ok(f * f)
}
