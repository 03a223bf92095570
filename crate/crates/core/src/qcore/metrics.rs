use crate::error::{Error, Result};

use super::linalg::{floored_sqrt, spectral_floor};
use super::{hermitian_eigen, sqrt_psd, DensityOperator};

fn same_width(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.num_qubits() != sigma.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.num_qubits(),
            found: sigma.num_qubits(),
        });
    }
    Ok(())
}

/// `D(ρ, σ) = ½ ‖ρ − σ‖₁`, computed from the eigenvalues of `ρ − σ`.
/// Eigenvalues inside the spectral floor count as 0, so equal states are at
/// distance exactly 0.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_width(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let (eigs, _) = hermitian_eigen(&diff);
    let floor = spectral_floor(eigs.len());
    let d = 0.5
        * eigs
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a > floor)
            .fold(0.0, |acc, a| acc + a);
    Ok(d.clamp(0.0, 1.0))
}

/// Non-squared fidelity `‖√ρ √σ‖₁ = tr √(√ρ σ √ρ)`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_width(rho, sigma)?;
    let sr = sqrt_psd(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let (eigs, _) = hermitian_eigen(&inner);
    let n = eigs.len();
    let f = eigs
        .iter()
        .map(|&v| floored_sqrt(v, n))
        .fold(0.0, |acc, s| acc + s);
    Ok(f.clamp(0.0, 1.0))
}

/// `F(ρ, I/2^q) = tr√ρ / √(2^q)`, avoiding a second matrix square root.
pub fn fidelity_to_maximally_mixed(rho: &DensityOperator) -> f64 {
    let (eigs, _) = hermitian_eigen(rho.matrix());
    let n = eigs.len();
    let f = eigs
        .iter()
        .map(|&v| floored_sqrt(v, n))
        .fold(0.0, |acc, s| acc + s)
        / (n as f64).sqrt();
    f.clamp(0.0, 1.0)
}
