//! Seeded random instances: states, unitaries, correlation matrices.
//!
//! All generators take an explicit RNG so callers control reproducibility.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::{norm, ComplexMatrix};
use crate::scalar::{cis, Real, C};

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(T::lit(re), T::lit(im))
}

/// Complex Gaussian vector.
pub fn gaussian_vector<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C<T>> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Haar-random unit vector.
pub fn random_pure_state<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C<T>> {
    let v = gaussian_vector::<T, R>(d, rng);
    let n = norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Hermitian matrix with Gaussian entries (GUE-like).
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix<T> {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    g.hermitian_part()
}

/// Haar-random unitary via Gram–Schmidt on a Gaussian matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix<T> {
    let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = gaussian_vector::<T, R>(d, rng);
        for u in &cols {
            let p = crate::numerics::inner(u, &v);
            for (x, y) in v.iter_mut().zip(u) {
                *x = *x - *y * p;
            }
        }
        let n = norm(&v);
        if n > T::lit(1e-6) {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// Density matrix of rank at most `rank` (Wishart construction).
pub fn random_density<T: Real, R: Rng + ?Sized>(
    d: usize,
    rank: usize,
    rng: &mut R,
) -> ComplexMatrix<T> {
    let g = ComplexMatrix::from_fn(d, rank.max(1), |_, _| gaussian(rng));
    let w = g.matmul(&g.adjoint()).expect("shapes agree").hermitian_part();
    let tr = w.trace().re;
    w.scale_real(T::one() / tr)
}

/// Pure-state density matrix `|ψ><ψ|` for a Haar-random ψ.
pub fn random_pure_density<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix<T> {
    let psi = random_pure_state::<T, R>(d, rng);
    ComplexMatrix::outer(&psi, &psi)
}

/// Random correlation matrix: the Gram matrix of `d` random unit vectors in
/// `C^rank`. Its rank is `min(rank, d)` almost surely.
pub fn random_correlation<T: Real, R: Rng + ?Sized>(
    d: usize,
    rank: usize,
    rng: &mut R,
) -> ComplexMatrix<T> {
    let vs: Vec<Vec<C<T>>> = (0..d)
        .map(|_| random_pure_state::<T, R>(rank.max(1), rng))
        .collect();
    let mut g = crate::numerics::gram_matrix(&vs);
    for k in 0..d {
        g[(k, k)] = C::new(T::one(), T::zero());
    }
    g
}

/// Uniform phases in `[0, 2π)` with the first fixed to zero.
pub fn random_phases<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<T> {
    (0..d)
        .map(|k| {
            if k == 0 {
                T::zero()
            } else {
                T::lit(rng.random::<f64>() * std::f64::consts::TAU)
            }
        })
        .collect()
}

/// Unimodular vector `Σ_k e^{iφ_k}|k>` for given phases.
pub fn unimodular<T: Real>(phases: &[T]) -> Vec<C<T>> {
    phases.iter().map(|&p| cis(p)).collect()
}

/// Probability vector with strictly positive entries bounded below by `floor`.
pub fn random_probabilities<T: Real, R: Rng + ?Sized>(n: usize, floor: f64, rng: &mut R) -> Vec<T> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| T::lit(x / s)).collect()
}

/// Derives an independent stream seed from a master seed and two indices
/// (SplitMix64 finalizer).
pub fn sub_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
