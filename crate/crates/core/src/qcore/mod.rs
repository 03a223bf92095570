//! Dense finite-dimensional quantum state algebra.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so the
//! "first k qubits" of a register are indices `0..k` and a tensor product
//! `a ⊗ b` places `a` in the leading positions.

mod linalg;
mod metrics;
pub(crate) mod uhlmann;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use linalg::{hermitian_eigen, is_unitary, sqrt_psd};
pub use metrics::{fidelity, fidelity_to_maximally_mixed, trace_distance};
pub use uhlmann::uhlmann_unitary;

pub type C64 = Complex64;

/// Tolerance for algebraic identities.
pub const EPS_ALGEBRAIC: f64 = 1e-9;
/// Tolerance for composed constructions (Uhlmann, purification round trips).
pub const EPS_COMPOSED: f64 = 1e-7;

pub const DEFAULT_DIM_CAP: usize = 14;

static DIM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DIM_CAP);

/// Current qubit cap for dense simulation.
pub fn dim_cap() -> usize {
    DIM_CAP.load(Ordering::Relaxed)
}

/// Sets the process-wide qubit cap. The CLI calls this once at startup.
pub fn set_dim_cap(qubits: usize) {
    DIM_CAP.store(qubits, Ordering::Relaxed);
}

pub fn check_cap(qubits: usize) -> Result<()> {
    let cap = dim_cap();
    if qubits > cap {
        return Err(Error::DimensionCap {
            requested: qubits,
            cap,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Bit mask of qubit `q` in an `n`-qubit index.
#[inline]
/// Largest entry modulus.
pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn qubit_mask(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

/// For each local index over `qubits` (in order), the corresponding global
/// index bits inside an `n`-qubit register.
pub(crate) fn scatter_table(n: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|local| {
            qubits.iter().enumerate().fold(0, |acc, (j, &q)| {
                if local & (1 << (k - 1 - j)) != 0 {
                    acc | qubit_mask(n, q)
                } else {
                    acc
                }
            })
        })
        .collect()
}

/// Local index formed by the bits of `qubits` (in order) inside `idx`.
#[inline]
pub(crate) fn gather_bits(n: usize, qubits: &[usize], idx: usize) -> usize {
    qubits.iter().fold(0, |acc, &q| {
        (acc << 1) | usize::from(idx & qubit_mask(n, q) != 0)
    })
}

fn sorted_unique(n: usize, qubits: &[usize]) -> Result<Vec<usize>> {
    let mut out = qubits.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&q) = out.iter().find(|&&q| q >= n) {
        return Err(Error::QubitOutOfRange { index: q, width: n });
    }
    Ok(out)
}

fn complement(n: usize, qubits: &[usize]) -> Vec<usize> {
    (0..n).filter(|q| !qubits.contains(q)).collect()
}

/// A normalized state vector over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Validates length and normalization.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > EPS_ALGEBRAIC {
            return Err(Error::InvalidState(format!(
                "squared norm is {norm}, expected 1"
            )));
        }
        Ok(Self::from_vec_unchecked(amplitudes))
    }

    pub(crate) fn from_vec_unchecked(amplitudes: DVector<C64>) -> Self {
        let num_qubits = amplitudes.len().trailing_zeros() as usize;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    /// The computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut v = DVector::zeros(1 << num_qubits);
        v[index] = c(1.0, 0.0);
        Self::from_vec_unchecked(v)
    }

    pub fn zeros(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        Self::from_vec_unchecked(self.amplitudes.kronecker(&other.amplitudes))
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(&self.amplitudes * self.amplitudes.adjoint())
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Reduced density operator on `keep` (sorted ascending), computed as
    /// `M M†` with `M` the amplitude matrix across the kept/traced cut.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator> {
        let n = self.num_qubits;
        let keep = sorted_unique(n, keep)?;
        let m = self.cut_matrix(&keep);
        Ok(DensityOperator::from_matrix_unchecked(&m * m.adjoint()))
    }

    /// Amplitudes reshaped as a matrix with rows indexed by `rows` qubits and
    /// columns by the remaining qubits, both in ascending order.
    pub(crate) fn cut_matrix(&self, rows: &[usize]) -> DMatrix<C64> {
        let n = self.num_qubits;
        let cols = complement(n, rows);
        let row_idx = scatter_table(n, rows);
        let col_idx = scatter_table(n, &cols);
        DMatrix::from_fn(row_idx.len(), col_idx.len(), |a, b| {
            self.amplitudes[row_idx[a] | col_idx[b]]
        })
    }

    /// Inverse of [`cut_matrix`](Self::cut_matrix).
    pub(crate) fn from_cut_matrix(n: usize, rows: &[usize], m: &DMatrix<C64>) -> Self {
        let cols = complement(n, rows);
        let row_idx = scatter_table(n, rows);
        let col_idx = scatter_table(n, &cols);
        let mut v = DVector::zeros(1 << n);
        for (a, &ra) in row_idx.iter().enumerate() {
            for (b, &cb) in col_idx.iter().enumerate() {
                v[ra | cb] = m[(a, b)];
            }
        }
        Self::from_vec_unchecked(v)
    }

    /// Reorders qubits: new qubit `j` is old qubit `order[j]`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<PureState> {
        let n = self.num_qubits;
        check_permutation(n, order)?;
        let table = scatter_table(n, order);
        let mut v = DVector::zeros(1 << n);
        for (new_idx, &old_idx) in table.iter().enumerate() {
            v[new_idx] = self.amplitudes[old_idx];
        }
        Ok(Self::from_vec_unchecked(v))
    }

    /// Applies `u` to the listed qubits (in the given order).
    pub fn apply_unitary(&self, u: &DMatrix<C64>, qubits: &[usize]) -> Result<PureState> {
        let n = self.num_qubits;
        if u.nrows() != 1 << qubits.len() || u.ncols() != u.nrows() {
            return Err(Error::DimensionMismatch {
                expected: qubits.len(),
                found: u.nrows().trailing_zeros() as usize,
            });
        }
        for &q in qubits {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, width: n });
            }
        }
        let m = self.cut_matrix(qubits);
        Ok(Self::from_cut_matrix(n, qubits, &(u * m)))
    }

    /// Squared norm of the projection onto basis states whose bits at
    /// `qubits` form an index contained in `accept`.
    pub fn outcome_probability(&self, qubits: &[usize], accept: impl Fn(usize) -> bool) -> f64 {
        let n = self.num_qubits;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| accept(gather_bits(n, qubits, *idx)))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// True if `self` equals `other` up to a global phase within `tol`
    /// (vector 2-norm).
    pub fn equal_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        if self.num_qubits != other.num_qubits {
            return false;
        }
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c(1.0, 0.0)
        };
        (&self.amplitudes * phase - &other.amplitudes).norm() <= tol
    }
}

fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: order.len(),
        });
    }
    for &q in order {
        if q >= n || seen[q] {
            return Err(Error::InvalidState(format!(
                "{order:?} is not a permutation of {n} qubits"
            )));
        }
        seen[q] = true;
    }
    Ok(())
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    num_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity within 1e-9.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || !d.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "{}x{} is not a square power-of-two matrix",
                d,
                matrix.ncols()
            )));
        }
        let herm_dev = max_abs(&(&matrix - matrix.adjoint()));
        if herm_dev > EPS_ALGEBRAIC {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > EPS_ALGEBRAIC || tr.im.abs() > EPS_ALGEBRAIC {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (eigs, _) = hermitian_eigen(&matrix);
        if let Some(min) = eigs.iter().copied().reduce(f64::min) {
            if min < -EPS_ALGEBRAIC {
                return Err(Error::InvalidState(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        let num_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { num_qubits, matrix }
    }

    /// `I / 2^q`.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1usize << num_qubits;
        Self::from_matrix_unchecked(DMatrix::identity(d, d) * c(1.0 / d as f64, 0.0))
    }

    /// `|index⟩⟨index|`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        PureState::basis(num_qubits, index).density()
    }

    /// Diagonal state from a probability vector (must sum to one).
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let v: Vec<C64> = probabilities.iter().map(|&p| c(p, 0.0)).collect();
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(v)))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        Self::from_matrix_unchecked(self.matrix.kronecker(&other.matrix))
    }

    /// Reduced state on `keep`; kept qubits retain their relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let n = self.num_qubits;
        let keep = sorted_unique(n, keep)?;
        let traced = complement(n, &keep);
        let kidx = scatter_table(n, &keep);
        let tidx = scatter_table(n, &traced);
        let dk = kidx.len();
        let m = &self.matrix;
        let out = DMatrix::from_fn(dk, dk, |a, b| {
            tidx.iter()
                .map(|&t| m[(kidx[a] | t, kidx[b] | t)])
                .sum::<C64>()
        });
        Ok(Self::from_matrix_unchecked(out))
    }

    /// Reorders qubits: new qubit `j` is old qubit `order[j]`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<DensityOperator> {
        let n = self.num_qubits;
        check_permutation(n, order)?;
        let table = scatter_table(n, order);
        let m = &self.matrix;
        Ok(Self::from_matrix_unchecked(DMatrix::from_fn(
            m.nrows(),
            m.ncols(),
            |a, b| m[(table[a], table[b])],
        )))
    }

    /// `U ρ U†` for a unitary `u` on the whole register.
    pub fn conjugate(&self, u: &DMatrix<C64>) -> Result<DensityOperator> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: u.nrows().trailing_zeros() as usize,
            });
        }
        Ok(Self::from_matrix_unchecked(u * &self.matrix * u.adjoint()))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let a = psi.amplitudes();
        a.dotc(&(&self.matrix * a)).re
    }

    /// Probability that measuring `qubits` yields an outcome accepted by
    /// `accept`.
    pub fn outcome_probability(&self, qubits: &[usize], accept: impl Fn(usize) -> bool) -> f64 {
        let n = self.num_qubits;
        (0..self.dim())
            .filter(|&idx| accept(gather_bits(n, qubits, idx)))
            .map(|idx| self.matrix[(idx, idx)].re)
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// Kronecker product; qubit counts add and `a` takes the leading positions.
pub fn tensor_pure(a: &PureState, b: &PureState) -> PureState {
    a.tensor(b)
}

pub fn tensor_density(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    a.tensor(b)
}

/// Reduced state of `rho` on `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    rho.partial_trace(keep)
}

/// `k` EPR pairs on `2k` qubits; qubit `i` is paired with qubit `k + i`.
pub fn epr_pairs(k: usize) -> PureState {
    let n = 2 * k;
    let amp = c((0.5f64).powf(k as f64 / 2.0), 0.0);
    let mut v = DVector::zeros(1 << n);
    for x in 0..1usize << k {
        v[(x << k) | x] = amp;
    }
    PureState::from_vec_unchecked(v)
}

/// Eigen-purification of `rho` on `2q` qubits: tracing out the last `q`
/// qubits recovers `rho`.
pub fn purify(rho: &DensityOperator) -> PureState {
    let q = rho.num_qubits();
    let d = rho.dim();
    let (eigs, vecs) = hermitian_eigen(rho.matrix());
    let mut v = DVector::zeros(d * d);
    // Largest eigenvalue pairs with |0⟩ on the purifying register.
    for (j, &lambda) in eigs.iter().rev().enumerate() {
        let w = linalg::floored_sqrt(lambda, d);
        if w == 0.0 {
            continue;
        }
        let col = d - 1 - j;
        for i in 0..d {
            v[(i << q) | j] += vecs[(i, col)] * w;
        }
    }
    let norm = v.norm();
    PureState::from_vec_unchecked(v / c(norm, 0.0))
}

/// `ρ^{⊗r}`.
pub fn tensor_power_state(rho: &DensityOperator, r: usize) -> Result<DensityOperator> {
    if r == 0 {
        return Err(Error::InvalidState("tensor power must be positive".into()));
    }
    check_cap(rho.num_qubits() * r)?;
    let mut out = rho.clone();
    for _ in 1..r {
        out = out.tensor(rho);
    }
    Ok(out)
}

/// Named qubit registers laid out as consecutive index ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterPartition {
    registers: Vec<(String, usize)>,
}

impl RegisterPartition {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let registers: Vec<(String, usize)> =
            registers.into_iter().map(|(n, c)| (n.into(), c)).collect();
        for (i, (name, _)) in registers.iter().enumerate() {
            if registers[..i].iter().any(|(other, _)| other == name) {
                return Err(Error::InvalidState(format!("duplicate register {name}")));
            }
        }
        Ok(Self { registers })
    }

    pub fn total(&self) -> usize {
        self.registers.iter().map(|(_, c)| c).sum()
    }

    /// Qubit indices of register `name`.
    pub fn range(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for (n, count) in &self.registers {
            if n == name {
                return Some(start..start + count);
            }
            start += count;
        }
        None
    }

    pub fn qubits(&self, name: &str) -> Vec<usize> {
        self.range(name).map(|r| r.collect()).unwrap_or_default()
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.registers
    }
}
