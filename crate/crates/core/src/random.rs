//! Seeded random states, unitaries and circuits for tests, oracles and search.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qcore::{c, DensityOperator, PureState, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of sub-task `index` from a master seed by fixed
/// arithmetic, so batches are reproducible in any execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for row in 0..dim {
            q[(row, k)] *= phase;
        }
    }
    q
}

pub fn random_pure_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> PureState {
    let v = DVector::from_fn(1 << num_qubits, |_, _| gaussian_c64(rng));
    let norm = v.norm();
    PureState::from_vec_unchecked(v / c(norm, 0.0))
}

/// Random mixed state of the given rank (clamped to the dimension), as the
/// reduction of a random pure state.
pub fn random_density<R: Rng + ?Sized>(
    num_qubits: usize,
    rank: usize,
    rng: &mut R,
) -> DensityOperator {
    let d = 1usize << num_qubits;
    let rank = rank.clamp(1, d);
    let g = DMatrix::from_fn(d, rank, |_, _| gaussian_c64(rng));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator::from_matrix_unchecked(m / tr)
}

/// Full-rank random mixed state.
pub fn random_mixed<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> DensityOperator {
    random_density(num_qubits, 1 << num_qubits, rng)
}
