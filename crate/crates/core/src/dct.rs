//! Orthonormal DCT-II basis on a cell-centred grid.
//!
//! Row `k` of the basis is `c_k cos(pi k (i + 1/2) / n)`, with `c_0 = sqrt(1/n)`
//! and `c_k = sqrt(2/n)` otherwise. These vectors are exactly the eigenvectors
//! of the tridiagonal Laplacian with zero-flux walls half a cell outside the
//! first and last centres, which is what makes the transform diagonalise the
//! drift matrix and the adiabatic heat operator.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Basis matrix `F` with modes along rows; `F * F^T = I`.
pub fn dct_basis(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, i| {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        scale * (PI * k as f64 * (i as f64 + 0.5) / nf).cos()
    })
}

/// Wavenumbers `k = pi/n * (0, 1, ..., n-1)` in radians per cell.
pub fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / n as f64).collect()
}

/// Decay rates of the discrete adiabatic Laplacian scaled by `alpha / h^2`:
/// `4 alpha sin^2(k/2) / h^2`. With `alpha = 1/2`, `h = 1` these are the
/// singular values `2 sin^2(k/2)` of the drift matrix.
pub fn laplacian_rates(n: usize, alpha: f64, spacing: f64) -> Vec<f64> {
    wavenumbers(n)
        .into_iter()
        .map(|k| 4.0 * alpha * (k / 2.0).sin().powi(2) / (spacing * spacing))
        .collect()
}

pub fn forward(basis: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (basis * DVector::from_column_slice(v)).as_slice().to_vec()
}

pub fn inverse(basis: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (basis.tr_mul(&DVector::from_column_slice(v)))
        .as_slice()
        .to_vec()
}
