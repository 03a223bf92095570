//! Reductions between the promise problems and the proof system.

mod bqp;
mod gna;

use crate::channel::{Channel, Predicate, Step};
use crate::circuits::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::problems::{QsciInstance, StateSource};
use crate::protocol::{build_qsci_verifier, ProtocolSpec, QsciProtocol, SimulatorState};
use crate::qcore::{dim_cap, purify, tensor_power_state, DensityOperator};

pub use bqp::{
    amplified_accept_probability, bqp_thresholds, bqp_to_1qsci, majority_rounds, BqpReduction,
};
pub use gna::{
    gna_circuit, gna_orbit_summary, gna_output_state, gna_sweep, gna_tags, gna_to_qsci,
    GnaOrbitSummary, GnaReduction, GnaSweepEntry, GNA_ALPHA, GNA_BETA,
};

/// Lower bound on `D(ρ^{⊗r}, I)` given `D(ρ, I) ≥ d`: `1 − (1 − d²)^{r/2}`.
pub fn amplified_distance_bound(d: f64, r: usize) -> f64 {
    1.0 - (1.0 - d * d).max(0.0).powf(r as f64 / 2.0)
}

/// `r` independent copies of the instance.
///
/// Circuit sources become `r` parallel copies; other sources are replaced
/// by the exact tensor power of their output state. Thresholds move to
/// `(min(1, rα), 1 − (1 − β²)^{r/2})`, which must stay separated.
pub fn amplify(inst: &QsciInstance, r: usize) -> Result<QsciInstance> {
    if r == 0 {
        return Err(Error::InvalidInstance(
            "amplification needs at least one copy".into(),
        ));
    }
    if r == 1 {
        return Ok(inst.clone());
    }
    let source = match inst.source() {
        StateSource::Circuit(c) => {
            crate::qcore::check_cap(c.q_in() * r)?;
            StateSource::Circuit(c.parallel_copies(r)?)
        }
        other => StateSource::State(tensor_power_state(&other.output_state()?, r)?),
    };
    let alpha = (inst.alpha() * r as f64).min(1.0);
    let beta = amplified_distance_bound(inst.beta(), r);
    if alpha >= beta {
        return Err(Error::InvalidInstance(format!(
            "thresholds ({alpha}, {beta}) no longer separate after {r} copies"
        )));
    }
    QsciInstance::new(alpha, beta, source)
}

/// A STATEPREP circuit whose output register holds `rho`, via its
/// eigen-purification on twice as many qubits.
pub fn state_prep_circuit(rho: &DensityOperator) -> Result<Circuit> {
    let q = rho.num_qubits();
    crate::qcore::check_cap(2 * q)?;
    let psi = purify(rho);
    let gate = Gate::StatePrep {
        targets: (0..2 * q).collect(),
        amplitudes: psi.amplitudes().iter().copied().collect(),
    };
    Circuit::new(2 * q, q, vec![gate])
}

/// Output of [`qsci_to_protocol`].
#[derive(Debug, Clone)]
pub struct QsciProtocolReduction {
    pub protocol: QsciProtocol,
    /// Number of parallel copies of the instance circuit.
    pub copies: usize,
    /// Guaranteed cheat bound on no-instances, `1 − D_r²` with
    /// `D_r = 1 − (1 − β²)^{r/2}`.
    pub soundness_bound: f64,
}

/// `1 − (1 − (1 − β²)^{r/2})²`: upper bound on any prover's acceptance
/// for a no-instance amplified `r` times, via `F² ≤ 1 − D²`.
pub fn soundness_after_copies(beta: f64, r: usize) -> f64 {
    let d = amplified_distance_bound(beta, r);
    1.0 - d * d
}

/// Builds the zero-knowledge protocol for a `(0, β)` instance, choosing the
/// fewest copies whose guaranteed cheat bound is at most `target_soundness`.
pub fn qsci_to_protocol(
    inst: &QsciInstance,
    target_soundness: f64,
) -> Result<QsciProtocolReduction> {
    if inst.alpha() != 0.0 {
        return Err(Error::InvalidInstance(format!(
            "the protocol needs alpha = 0, got {}",
            inst.alpha()
        )));
    }
    if !(target_soundness > 0.0 && target_soundness < 1.0) {
        return Err(Error::InvalidProtocol(format!(
            "target soundness must lie in (0, 1), got {target_soundness}"
        )));
    }
    let base = match inst.source() {
        StateSource::Circuit(c) => c.clone(),
        other => state_prep_circuit(&other.output_state()?)?,
    };
    let cap = dim_cap();
    let mut r = 1;
    while soundness_after_copies(inst.beta(), r) > target_soundness {
        r += 1;
        if base.q_in() * r > cap {
            return Err(Error::DimensionCap {
                requested: base.q_in() * r,
                cap,
            });
        }
    }
    let amplified = if r == 1 {
        base
    } else {
        base.parallel_copies(r)?
    };
    Ok(QsciProtocolReduction {
        protocol: build_qsci_verifier(&amplified)?,
        copies: r,
        soundness_bound: soundness_after_copies(inst.beta(), r),
    })
}

/// Threshold `β` of instances produced by [`protocol_to_qsci`].
pub const PROTOCOL_QSCI_BETA: f64 = 0.2;

/// The simulator-driven channel on `q_S` output qubits:
///
/// 1. prepare `sim` on `V ⊗ M`;
/// 2. if any verifier private qubit reads 1, output `|0^{q_S}⟩`;
/// 3. otherwise with probability 1/2 output `S`, and with probability 1/2
///    run the verifier and output `I/2^{q_S}` on accept, `|0^{q_S}⟩` on reject.
///
/// Honest simulators of yes-instances give exactly `I/2^{q_S}`.
pub fn protocol_to_qsci(spec: &ProtocolSpec, sim: &SimulatorState) -> Result<QsciInstance> {
    let k = spec.q_s();
    if k == 0 {
        return Err(Error::InvalidProtocol(
            "no shared EPR pairs, nothing to output".into(),
        ));
    }
    if sim.state().num_qubits() != spec.view_qubits() {
        return Err(Error::DimensionMismatch {
            expected: spec.view_qubits(),
            found: sim.state().num_qubits(),
        });
    }
    let zero = DensityOperator::basis(k, 0);
    let mixed = DensityOperator::maximally_mixed(k);
    let rule = spec.accept_rule();
    let verify = vec![
        Step::Unitary(spec.verifier().clone()),
        Step::Measure {
            qubits: rule.qubits(),
            predicate: Predicate::OutcomeIn(rule.accepting_outcomes()),
            then: vec![Step::Prepare(mixed)],
            otherwise: vec![Step::Prepare(zero.clone())],
        },
    ];
    let coin = Step::Coin {
        heads_probability: 0.5,
        heads: vec![Step::Keep(spec.shared())],
        tails: verify,
    };
    let private = spec.verifier_private();
    let mut steps = vec![Step::Prepare(sim.state().clone())];
    if private.is_empty() {
        steps.push(coin);
    } else {
        steps.push(Step::Measure {
            qubits: private,
            predicate: Predicate::AnyOne,
            then: vec![Step::Prepare(zero)],
            otherwise: vec![coin],
        });
    }
    let channel = Channel::new(k, steps)?;
    QsciInstance::new(0.0, PROTOCOL_QSCI_BETA, StateSource::Channel(channel))
}
