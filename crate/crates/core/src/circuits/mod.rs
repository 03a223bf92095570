//! Gate-level circuits over `{H, X, S, S†, T, T†, CNOT}` plus a
//! state-preparation pseudo-gate allowed only as a circuit prefix.

pub(crate) mod format;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qcore::{
    c, check_cap, qubit_mask, scatter_table, DensityOperator, PureState, C64, EPS_ALGEBRAIC,
};

pub use format::{format_amplitude, parse_circuit, serialize_circuit};

/// One instruction of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Tdg(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// Loads `amplitudes` into `targets`, which must still be `|0…0⟩`.
    StatePrep {
        targets: Vec<usize>,
        amplitudes: Vec<C64>,
    },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "Sdg",
            Gate::T(_) => "T",
            Gate::Tdg(_) => "Tdg",
            Gate::Cnot { .. } => "CNOT",
            Gate::StatePrep { .. } => "STATEPREP",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::S(q) | Gate::Sdg(q) | Gate::T(q) | Gate::Tdg(q) => {
                vec![*q]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::StatePrep { targets, .. } => targets.clone(),
        }
    }

    pub fn is_state_prep(&self) -> bool {
        matches!(self, Gate::StatePrep { .. })
    }

    /// The inverse gate; `None` for state preparation.
    pub fn inverse(&self) -> Option<Gate> {
        Some(match self {
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::T(q) => Gate::Tdg(*q),
            Gate::Tdg(q) => Gate::T(*q),
            Gate::StatePrep { .. } => return None,
            g => g.clone(),
        })
    }

    /// 2×2 matrix of a single-qubit gate.
    pub fn single_qubit_matrix(&self) -> Option<[[C64; 2]; 2]> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        Some(match self {
            Gate::H(_) => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            Gate::X(_) => [[zero, one], [one, zero]],
            Gate::S(_) => [[one, zero], [zero, c(0.0, 1.0)]],
            Gate::Sdg(_) => [[one, zero], [zero, c(0.0, -1.0)]],
            Gate::T(_) => [[one, zero], [zero, c(s, s)]],
            Gate::Tdg(_) => [[one, zero], [zero, c(s, -s)]],
            _ => return None,
        })
    }

    fn relabel(&self, map: &[usize]) -> Gate {
        match self {
            Gate::H(q) => Gate::H(map[*q]),
            Gate::X(q) => Gate::X(map[*q]),
            Gate::S(q) => Gate::S(map[*q]),
            Gate::Sdg(q) => Gate::Sdg(map[*q]),
            Gate::T(q) => Gate::T(map[*q]),
            Gate::Tdg(q) => Gate::Tdg(map[*q]),
            Gate::Cnot { control, target } => Gate::Cnot {
                control: map[*control],
                target: map[*target],
            },
            Gate::StatePrep {
                targets,
                amplitudes,
            } => Gate::StatePrep {
                targets: targets.iter().map(|&q| map[q]).collect(),
                amplitudes: amplitudes.clone(),
            },
        }
    }

    /// Checks arity and indices against a `width`-qubit register.
    pub fn validate(&self, width: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= width {
                return Err(Error::InvalidCircuit(format!(
                    "{} targets qubit {q} but the circuit has {width} qubits",
                    self.name()
                )));
            }
        }
        match self {
            Gate::Cnot { control, target } if control == target => Err(Error::InvalidCircuit(
                "CNOT needs two distinct qubits".into(),
            )),
            Gate::StatePrep {
                targets,
                amplitudes,
            } => {
                if targets.is_empty() {
                    return Err(Error::InvalidCircuit(
                        "STATEPREP needs at least one target".into(),
                    ));
                }
                let mut sorted = targets.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != targets.len() {
                    return Err(Error::InvalidCircuit(
                        "STATEPREP targets must be distinct".into(),
                    ));
                }
                if amplitudes.len() != 1 << targets.len() {
                    return Err(Error::InvalidCircuit(format!(
                        "STATEPREP on {} qubits needs {} amplitudes, got {}",
                        targets.len(),
                        1usize << targets.len(),
                        amplitudes.len()
                    )));
                }
                let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
                if (norm - 1.0).abs() > EPS_ALGEBRAIC {
                    return Err(Error::InvalidCircuit(format!(
                        "STATEPREP amplitudes have squared norm {norm}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Applies the gate to the leading qubits of `state`, whose total width
    /// is `n`.
    fn apply(&self, n: usize, v: &mut DVector<C64>) {
        match self {
            Gate::Cnot { control, target } => {
                let cm = qubit_mask(n, *control);
                let tm = qubit_mask(n, *target);
                for idx in 0..v.len() {
                    if idx & cm != 0 && idx & tm == 0 {
                        v.swap_rows(idx, idx | tm);
                    }
                }
            }
            Gate::StatePrep {
                targets,
                amplitudes,
            } => {
                let table = scatter_table(n, targets);
                let mask = table.last().copied().unwrap_or(0);
                let mut out = DVector::zeros(v.len());
                for idx in (0..v.len()).filter(|i| i & mask == 0) {
                    let a = v[idx];
                    if a == c(0.0, 0.0) {
                        continue;
                    }
                    for (t, &bits) in table.iter().enumerate() {
                        out[idx | bits] += a * amplitudes[t];
                    }
                }
                *v = out;
            }
            single => {
                let m = single.single_qubit_matrix().expect("single-qubit gate");
                let q = single.qubits()[0];
                let mask = qubit_mask(n, q);
                for idx in (0..v.len()).filter(|i| i & mask == 0) {
                    let (a0, a1) = (v[idx], v[idx | mask]);
                    v[idx] = m[0][0] * a0 + m[0][1] * a1;
                    v[idx | mask] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::StatePrep {
                targets,
                amplitudes,
            } => {
                write!(f, "STATEPREP")?;
                for t in targets {
                    write!(f, " {t}")?;
                }
                write!(f, " :")?;
                for a in amplitudes {
                    write!(f, " {}", format_amplitude(*a))?;
                }
                Ok(())
            }
            g => write!(f, "{} {}", g.name(), g.qubits()[0]),
        }
    }
}

/// A `q_in`-in, `q_out`-out circuit; the outputs are qubits `0..q_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    q_in: usize,
    q_out: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(q_in: usize, q_out: usize, gates: Vec<Gate>) -> Result<Self> {
        if q_out > q_in {
            return Err(Error::InvalidCircuit(format!(
                "{q_out} output qubits exceed {q_in} input qubits"
            )));
        }
        for g in &gates {
            g.validate(q_in)?;
        }
        check_prep_prefix(&gates)?;
        Ok(Self { q_in, q_out, gates })
    }

    /// The empty circuit on `q_in` qubits.
    pub fn identity(q_in: usize, q_out: usize) -> Result<Self> {
        Self::new(q_in, q_out, Vec::new())
    }

    pub fn q_in(&self) -> usize {
        self.q_in
    }

    pub fn q_out(&self) -> usize {
        self.q_out
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn has_state_prep(&self) -> bool {
        self.gates.iter().any(Gate::is_state_prep)
    }

    pub fn with_q_out(&self, q_out: usize) -> Result<Self> {
        Self::new(self.q_in, q_out, self.gates.clone())
    }

    /// Applies the gates to the leading `q_in` qubits of `state`.
    pub fn apply_to(&self, state: &mut PureState) -> Result<()> {
        let n = state.num_qubits();
        if n < self.q_in {
            return Err(Error::DimensionMismatch {
                expected: self.q_in,
                found: n,
            });
        }
        let v = state.amplitudes_mut();
        for g in &self.gates {
            g.apply(n, v);
        }
        Ok(())
    }

    /// `U |0^{q_in}⟩`.
    pub fn evaluate_pure(&self) -> Result<PureState> {
        check_cap(self.q_in)?;
        let mut state = PureState::zeros(self.q_in);
        self.apply_to(&mut state)?;
        Ok(state)
    }

    /// Reduced output state on qubits `0..q_out`.
    pub fn output_state(&self) -> Result<DensityOperator> {
        let psi = self.evaluate_pure()?;
        let keep: Vec<usize> = (0..self.q_out).collect();
        psi.reduced(&keep)
    }

    /// Full unitary matrix, assembled column by column.
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        if self.has_state_prep() {
            return Err(Error::InvalidCircuit(
                "STATEPREP has no unitary matrix".into(),
            ));
        }
        check_cap(self.q_in)?;
        let d = 1usize << self.q_in;
        let mut u = DMatrix::zeros(d, d);
        for col in 0..d {
            let mut state = PureState::basis(self.q_in, col);
            self.apply_to(&mut state)?;
            u.set_column(col, state.amplitudes());
        }
        Ok(u)
    }

    /// Reversed gate list with every gate inverted.
    pub fn adjoint(&self) -> Result<Self> {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                g.inverse()
                    .ok_or_else(|| Error::InvalidCircuit("cannot invert STATEPREP".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            q_in: self.q_in,
            q_out: self.q_out,
            gates,
        })
    }

    /// Relabels qubit `j` as `map[j]` inside a `width`-qubit circuit.
    pub fn embed(&self, width: usize, q_out: usize, map: &[usize]) -> Result<Self> {
        if map.len() != self.q_in {
            return Err(Error::DimensionMismatch {
                expected: self.q_in,
                found: map.len(),
            });
        }
        let gates = self.gates.iter().map(|g| g.relabel(map)).collect();
        Self::new(width, q_out, gates)
    }

    /// Appends `other`'s gates (acting on the same qubit indices).
    pub fn then(&self, other: &Circuit) -> Result<Self> {
        let width = self.q_in.max(other.q_in);
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Self::new(width, self.q_out, gates)
    }

    /// `r` side-by-side copies. The outputs of all copies come first (copy
    /// `k` owns outputs `k*q_out..(k+1)*q_out`), followed by each copy's
    /// remaining qubits.
    pub fn parallel_copies(&self, r: usize) -> Result<Self> {
        let (qi, qo) = (self.q_in, self.q_out);
        let width = qi * r;
        let mut gates = Vec::with_capacity(self.gates.len() * r);
        for k in 0..r {
            let map: Vec<usize> = (0..qi)
                .map(|j| {
                    if j < qo {
                        k * qo + j
                    } else {
                        r * qo + k * (qi - qo) + (j - qo)
                    }
                })
                .collect();
            gates.extend(self.gates.iter().map(|g| g.relabel(&map)));
        }
        // Copies touch disjoint qubits, so their STATEPREP prefixes can be
        // hoisted in front of all unitary gates.
        gates.sort_by_key(|g| !g.is_state_prep());
        Self::new(width, qo * r, gates)
    }

    /// Probability that measuring `qubit` of `U|0⟩` gives 1.
    pub fn probability_of_one(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.q_in {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                width: self.q_in,
            });
        }
        let psi = self.evaluate_pure()?;
        Ok(psi.outcome_probability(&[qubit], |b| b == 1))
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_circuit(self))
    }
}

fn check_prep_prefix(gates: &[Gate]) -> Result<()> {
    let prefix = gates.iter().take_while(|g| g.is_state_prep()).count();
    if gates[prefix..].iter().any(Gate::is_state_prep) {
        return Err(Error::InvalidCircuit(
            "STATEPREP may only appear before all other gates".into(),
        ));
    }
    let mut used = Vec::new();
    for g in &gates[..prefix] {
        for q in g.qubits() {
            if used.contains(&q) {
                return Err(Error::InvalidCircuit(format!(
                    "STATEPREP instructions overlap on qubit {q}"
                )));
            }
            used.push(q);
        }
    }
    Ok(())
}

/// Exact Toffoli on `(a, b) → target` in Clifford+T.
pub fn toffoli(a: usize, b: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::H(target),
        Gate::Cnot { control: b, target },
        Gate::Tdg(target),
        Gate::Cnot { control: a, target },
        Gate::T(target),
        Gate::Cnot { control: b, target },
        Gate::Tdg(target),
        Gate::Cnot { control: a, target },
        Gate::Tdg(b),
        Gate::T(target),
        Gate::Cnot {
            control: a,
            target: b,
        },
        Gate::H(target),
        Gate::Tdg(b),
        Gate::Cnot {
            control: a,
            target: b,
        },
        Gate::T(a),
        Gate::S(b),
    ]
}

/// Exact controlled-Hadamard, using `H = (S H T) X (T† H S†)`.
pub fn controlled_h(control: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::Sdg(target),
        Gate::H(target),
        Gate::Tdg(target),
        Gate::Cnot { control, target },
        Gate::T(target),
        Gate::H(target),
        Gate::S(target),
    ]
}
