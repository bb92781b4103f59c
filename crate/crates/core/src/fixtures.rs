//! Reference correlation matrices used by the regression suite, the CLI and
//! the tests.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::numerics::ComplexMatrix;
use crate::scalar::C;

/// Qubit correlation matrix with real off-diagonal entry `c`.
pub fn qubit(c: f64) -> ComplexMatrix<f64> {
    ComplexMatrix::from_real(&[&[1.0, c], &[c, 1.0]]).expect("2x2")
}

/// Rank-two `4 × 4` correlation matrix whose Schur channel is extremal with
/// two canonical Kraus operators, hence not a mixture of unitaries.
pub fn extremal_qudit() -> ComplexMatrix<f64> {
    let r = FRAC_1_SQRT_2;
    let c = C::new;
    ComplexMatrix::from_rows(&[
        vec![c(1.0, 0.0), c(0.0, 0.0), c(r, 0.0), c(r, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0), c(r, 0.0), c(0.0, r)],
        vec![c(r, 0.0), c(r, 0.0), c(1.0, 0.0), c(0.5, 0.5)],
        vec![c(r, 0.0), c(0.0, -r), c(0.5, -0.5), c(1.0, 0.0)],
    ])
    .expect("4x4")
}

/// Qutrit correlation matrix with eigenvalues `{2, 1, 0}` whose eigenvectors
/// are not unimodular, so no orthogonal unitary mixture reproduces it.
pub fn qutrit_gap() -> ComplexMatrix<f64> {
    let r = FRAC_1_SQRT_2;
    ComplexMatrix::from_real(&[&[1.0, 0.0, r], &[0.0, 1.0, r], &[r, r, 1.0]]).expect("3x3")
}

/// `(|0> + |1>)/√2` as a density matrix.
pub fn plus_state() -> ComplexMatrix<f64> {
    ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]).expect("2x2")
}
