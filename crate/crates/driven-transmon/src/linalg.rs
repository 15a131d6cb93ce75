//! Hermitian diagonalization with the eigenvector convention fixed.
//!
//! `ndarray-linalg`'s `eigh` hands back the complex conjugate of the
//! eigenvectors for complex Hermitian input (`A·conj(v) ≠ λ·conj(v)`); the
//! eigenvalues are correct and purely real matrices are unaffected, which
//! makes the defect easy to miss. Verified directly against σ_y and by
//! random-matrix reconstruction (see the regression test in
//! [`crate::spectrum`]). Every Hermitian diagonalization in this crate goes
//! through [`eigh_hermitian`], which undoes the conjugation; the general
//! (non-Hermitian) `eig` path is unaffected.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::Result;
use crate::C64;

/// Eigenvalues (ascending) and eigenvectors (columns) of a complex
/// Hermitian matrix, satisfying `A·v_k = λ_k·v_k`.
pub fn eigh_hermitian(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (vals, vecs) = a.eigh(UPLO::Lower)?;
    Ok((vals, vecs.mapv(|x| x.conj())))
}
