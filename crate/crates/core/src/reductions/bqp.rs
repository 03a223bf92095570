//! Accept probability of a circuit encoded as closeness of one qubit to
//! `I/2`.
//!
//! A helper qubit receives a controlled-H from the accept bit and is then
//! copied onto the output qubit with a CNOT. On accept the output is half of
//! a Bell pair, so its state is `p·I/2 + (1−p)|0⟩⟨0|` and its distance from
//! `I/2` is `(1−p)/2`. Qubit 0 is the output, qubit 1 the helper.
//! With `r = 3^m` copies the accept bit is replaced by a recursive
//! majority-of-three, computed exactly with Toffoli gates.

use crate::circuits::{controlled_h, toffoli, Circuit, Gate};
use crate::error::{Error, Result};
use crate::problems::{QsciInstance, StateSource};
use crate::qcore::check_cap;

/// Accept-probability thresholds of the source circuit before amplification.
const YES_PROBABILITY: f64 = 2.0 / 3.0;
const NO_PROBABILITY: f64 = 1.0 / 3.0;

#[derive(Debug, Clone)]
pub struct BqpReduction {
    pub instance: QsciInstance,
    /// Levels of majority voting, `r = 3^rounds`.
    pub rounds: usize,
}

/// `m` with `r = 3^m`.
pub fn majority_rounds(r: usize) -> Result<usize> {
    let mut m = 0;
    let mut x = r;
    while x > 1 && x.is_multiple_of(3) {
        x /= 3;
        m += 1;
    }
    if x != 1 {
        return Err(Error::InvalidInstance(format!(
            "copy count must be a power of three, got {r}"
        )));
    }
    Ok(m)
}

/// Accept probability after `rounds` levels of majority-of-three.
pub fn amplified_accept_probability(p: f64, rounds: usize) -> f64 {
    (0..rounds).fold(p, |q, _| 3.0 * q * q - 2.0 * q * q * q)
}

/// `(α, β) = ((1 − p_yes)/2, (1 − p_no)/2)` after amplification; `(1/6, 1/3)`
/// with no amplification.
pub fn bqp_thresholds(rounds: usize) -> (f64, f64) {
    let yes = amplified_accept_probability(YES_PROBABILITY, rounds);
    let no = amplified_accept_probability(NO_PROBABILITY, rounds);
    ((1.0 - yes) / 2.0, (1.0 - no) / 2.0)
}

/// Single-output-qubit instance from `circuit` accepting on `accept_qubit`,
/// using `r = 3^m` copies.
pub fn bqp_to_1qsci(circuit: &Circuit, accept_qubit: usize, r: usize) -> Result<BqpReduction> {
    if accept_qubit >= circuit.q_in() {
        return Err(Error::QubitOutOfRange {
            index: accept_qubit,
            width: circuit.q_in(),
        });
    }
    let rounds = majority_rounds(r)?;
    let q = circuit.q_in();
    let width = 2 + r * q + (r - 1) / 2;
    check_cap(width)?;

    // Copy `k` of the accept qubit after `parallel_copies` relabels with the
    // accept qubit treated as the only output.
    let single = reorder_accept_first(circuit, accept_qubit)?;
    let copies = single.parallel_copies(r)?;
    let shift: Vec<usize> = (0..r * q).map(|j| 2 + j).collect();
    let mut gates: Vec<Gate> = copies.embed(width, 1, &shift)?.gates().to_vec();

    let mut level: Vec<usize> = (0..r).map(|k| 2 + k).collect();
    let mut next_free = 2 + r * q;
    while level.len() > 1 {
        let mut up = Vec::with_capacity(level.len() / 3);
        for triple in level.chunks(3) {
            let (a, b, d) = (triple[0], triple[1], triple[2]);
            let t = next_free;
            next_free += 1;
            // maj(a, b, d) = ab ⊕ ad ⊕ bd.
            gates.extend(toffoli(a, b, t));
            gates.extend(toffoli(a, d, t));
            gates.extend(toffoli(b, d, t));
            up.push(t);
        }
        level = up;
    }
    gates.extend(controlled_h(level[0], 1));
    gates.push(Gate::Cnot {
        control: 1,
        target: 0,
    });
    let full = Circuit::new(width, 1, gates)?;
    let (alpha, beta) = bqp_thresholds(rounds);
    Ok(BqpReduction {
        instance: QsciInstance::new(alpha, beta, StateSource::Circuit(full))?,
        rounds,
    })
}

/// Same circuit with `accept_qubit` swapped to position 0 and declared the
/// single output.
fn reorder_accept_first(circuit: &Circuit, accept_qubit: usize) -> Result<Circuit> {
    let q = circuit.q_in();
    let map: Vec<usize> = (0..q)
        .map(|j| {
            if j == accept_qubit {
                0
            } else if j == 0 {
                accept_qubit
            } else {
                j
            }
        })
        .collect();
    circuit.embed(q, 1, &map)
}
