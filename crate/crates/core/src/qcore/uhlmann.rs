use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{complement, is_unitary, max_abs, PureState, C64, EPS_COMPOSED};

/// Finds a unitary `U` on the non-pivot qubits (ascending order) such that
/// `(I_pivot ⊗ U)|φ⟩ = |ψ⟩` up to a global phase.
///
/// Writing both states as amplitude matrices `A`, `B` across the
/// pivot/non-pivot cut, any `M` with `A M = B` gives `U = Mᵀ`. `M` is taken
/// from the polar factor of `A†B`, which attains `|⟨ψ|(I⊗U)|φ⟩| = F = 1`
/// whenever the pivot marginals agree. Null and degenerate Schmidt
/// subspaces are completed by the SVD's arbitrary orthonormal basis.
pub fn uhlmann_unitary(phi: &PureState, psi: &PureState, pivot: &[usize]) -> Result<DMatrix<C64>> {
    uhlmann_unitary_with_tolerance(phi, psi, pivot, EPS_COMPOSED)
}

pub(crate) fn uhlmann_unitary_with_tolerance(
    phi: &PureState,
    psi: &PureState,
    pivot: &[usize],
    tol: f64,
) -> Result<DMatrix<C64>> {
    let n = phi.num_qubits();
    if psi.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi.num_qubits(),
        });
    }
    let mut pivot = pivot.to_vec();
    pivot.sort_unstable();
    pivot.dedup();
    if let Some(&q) = pivot.iter().find(|&&q| q >= n) {
        return Err(Error::QubitOutOfRange { index: q, width: n });
    }
    let rest = complement(n, &pivot);

    let a = phi.cut_matrix(&pivot);
    let b = psi.cut_matrix(&pivot);
    let deviation = max_abs(&(&a * a.adjoint() - &b * b.adjoint()));
    if deviation > tol {
        return Err(Error::NoUhlmannUnitary { deviation });
    }

    let dr = 1usize << rest.len();
    if dr == 1 {
        return Ok(DMatrix::identity(1, 1));
    }
    let overlap = a.adjoint() * &b;
    let svd = overlap.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NoUhlmannUnitary { deviation }),
    };
    // M = X Y† for A†B = X Σ Y†.
    let m = u * v_t;
    let unitary = m.transpose();
    debug_assert!(is_unitary(&unitary, 1e-7));
    Ok(unitary)
}
