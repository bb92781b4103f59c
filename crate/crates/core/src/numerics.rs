//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on small matrices (dimension up to a few dozen), so
//! the kernels favour accuracy and determinism over speed: Hermitian spectra
//! come from cyclic complex Jacobi rotations and singular values from the
//! one-sided (Hestenes) variant of the same rotation.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{cre, cz, Real, C};

const MAX_SWEEPS: usize = 80;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![cz(); rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |r, c| if r == c { cre(T::one()) } else { cz() })
    }

    /// The d×d matrix with every entry equal to one.
    pub fn ones(d: usize) -> Self {
        Self::from_fn(d, d, |_, _| cre(T::one()))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Fails on ragged input.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Self::new(n, m, rows.iter().flatten().copied().collect())
    }

    /// Square matrix from real rows; convenient in tests and examples.
    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| cre(T::lit(x))).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[C<T>]) -> Self {
        let d = diag.len();
        Self::from_fn(d, d, |r, c| if r == c { diag[r] } else { cz() })
    }

    /// `|u><v|`.
    pub fn outer(u: &[C<T>], v: &[C<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix (rows otherwise).
    #[inline]
    pub fn dim(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).collect()
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T>) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Entrywise (Schur / Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == cz() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] = out[(r, c)] + a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            self[(r / r2, c / c2)] * other[(r % r2, c % c2)]
        })
    }

    pub fn trace(&self) -> C<T> {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// `max_{kl} |M_kl - conj(M_lk)|`.
    pub fn hermitian_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within `tol × (1 + max |M_kl|)`.
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.hermitian_defect() <= tol * (T::one() + self.max_abs())
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * half
        })
    }

    /// Partial trace over the second factor of a `(a·b)×(a·b)` matrix.
    pub fn partial_trace_second(&self, a: usize, b: usize) -> Result<Self> {
        self.check_bipartite(a, b)?;
        Ok(Self::from_fn(a, a, |i, j| {
            (0..b).map(|k| self[(i * b + k, j * b + k)]).sum()
        }))
    }

    /// Partial trace over the first factor of a `(a·b)×(a·b)` matrix.
    pub fn partial_trace_first(&self, a: usize, b: usize) -> Result<Self> {
        self.check_bipartite(a, b)?;
        Ok(Self::from_fn(b, b, |i, j| {
            (0..a).map(|k| self[(k * b + i, k * b + j)]).sum()
        }))
    }

    fn check_bipartite(&self, a: usize, b: usize) -> Result<()> {
        if !self.is_square() || self.rows != a * b {
            return Err(Error::DimensionMismatch {
                expected: a * b,
                found: self.rows,
            });
        }
        Ok(())
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub(crate) fn require_dim(&self, d: usize) -> Result<()> {
        let n = self.require_square()?;
        if n != d {
            return Err(Error::DimensionMismatch { expected: d, found: n });
        }
        Ok(())
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order. Each eigenvector (a column of
/// `eigenvectors`) is phase-fixed so that its first component of largest
/// modulus is real and nonnegative.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<C<T>> {
        self.eigenvectors.column(i)
    }

    pub fn max(&self) -> T {
        self.eigenvalues.first().copied().unwrap_or_else(T::zero)
    }

    pub fn min(&self) -> T {
        self.eigenvalues.last().copied().unwrap_or_else(T::zero)
    }

    /// Number of eigenvalues strictly above `rel_tol × λ_max`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let cut = rel_tol * self.max().max(T::zero());
        self.eigenvalues.iter().filter(|&&l| l > cut).count()
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let n = self.eigenvectors.rows();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            self.eigenvalues
                .iter()
                .enumerate()
                .map(|(i, &l)| v[(r, i)] * v[(c, i)].conj() * l)
                .sum()
        })
    }

    /// `V f(Λ) V†`.
    pub fn apply_fn(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        Spectrum {
            eigenvalues: self.eigenvalues.iter().map(|&l| f(l)).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
        .reconstruct()
    }
}

/// Tolerance used by [`hermitian_eig`] to reject non-Hermitian input.
pub fn hermitian_check_tol<T: Real>() -> T {
    // 1e-12 in double precision; scaled to the type's resolution otherwise.
    (T::epsilon() * T::lit(4500.0)).max(T::lit(1e-12))
}

/// Complex 2×2 Jacobi rotation that diagonalises `[[a, b], [b*, d]]`.
///
/// Returns the rotation entries `(g_pp, g_pq, g_qp, g_qq)` of `G` such that
/// `G† A G` has a vanishing `(p, q)` entry.
fn jacobi_rotation<T: Real>(a: T, d: T, b: C<T>) -> (C<T>, C<T>, C<T>, C<T>) {
    let bn = b.norm();
    let phase = b.conj() / bn;
    let zeta = (d - a) / (bn + bn);
    let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
    let t = sign / (zeta.abs() + T::one().hypot(zeta));
    let c = T::one() / T::one().hypot(t);
    let s = t * c;
    (cre(c), cre(s), phase * (-s), phase * c)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.
pub fn hermitian_eig<T: Real>(m: &ComplexMatrix<T>) -> Result<Spectrum<T>> {
    let n = m.require_square()?;
    if !m.is_hermitian(hermitian_check_tol()) {
        return Err(Error::NotHermitian {
            max_asymmetry: m.hermitian_defect().as_f64(),
        });
    }
    let mut a = m.hermitian_part();
    for k in 0..n {
        a[(k, k)] = cre(a[(k, k)].re);
    }
    let mut v = ComplexMatrix::<T>::identity(n);
    let scale = a.frobenius_norm();
    let negligible = T::epsilon() * T::lit(1e-3) * scale;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                if b.norm() <= negligible || b.norm() == T::zero() {
                    continue;
                }
                rotated = true;
                let (gpp, gpq, gqp, gqq) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, b);
                for k in 0..n {
                    let x = a[(k, p)];
                    let y = a[(k, q)];
                    a[(k, p)] = x * gpp + y * gqp;
                    a[(k, q)] = x * gpq + y * gqq;
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * gpp + y * gqp;
                    v[(k, q)] = x * gpq + y * gqq;
                }
                for k in 0..n {
                    let x = a[(p, k)];
                    let y = a[(q, k)];
                    a[(p, k)] = gpp.conj() * x + gqp.conj() * y;
                    a[(q, k)] = gpq.conj() * x + gqq.conj() * y;
                }
                a[(p, q)] = cz();
                a[(q, p)] = cz();
                a[(p, p)] = cre(a[(p, p)].re);
                a[(q, q)] = cre(a[(q, q)].re);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        fix_phase(&mut vec);
        for (r, z) in vec.into_iter().enumerate() {
            eigenvectors[(r, col)] = z;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Rotates `v` so its first component of largest modulus is real and
/// nonnegative.
pub(crate) fn fix_phase<T: Real>(v: &mut [C<T>]) {
    let mut best = 0;
    let mut best_mod = T::zero();
    let slack = T::one() + T::epsilon() * T::lit(64.0);
    for (k, z) in v.iter().enumerate() {
        if z.norm() > best_mod * slack {
            best = k;
            best_mod = z.norm();
        }
    }
    if best_mod == T::zero() {
        return;
    }
    let rot = v[best].conj() / best_mod;
    for z in v.iter_mut() {
        *z = *z * rot;
    }
    v[best] = cre(v[best].re);
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    let mut u = if m.cols() > m.rows() {
        m.adjoint()
    } else {
        m.clone()
    };
    let (rows, cols) = (u.rows(), u.cols());
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = cz::<T>();
                for k in 0..rows {
                    alpha = alpha + u[(k, p)].norm_sqr();
                    beta = beta + u[(k, q)].norm_sqr();
                    gamma = gamma + u[(k, p)].conj() * u[(k, q)];
                }
                if gamma.norm() == T::zero()
                    || gamma.norm() <= T::epsilon() * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let (gpp, gpq, gqp, gqq) = jacobi_rotation(alpha, beta, gamma);
                for k in 0..rows {
                    let x = u[(k, p)];
                    let y = u[(k, q)];
                    u[(k, p)] = x * gpp + y * gqp;
                    u[(k, q)] = x * gpq + y * gqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..cols)
        .map(|c| (0..rows).map(|r| u[(r, c)].norm_sqr()).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Factors a PSD matrix as a Gram matrix: returns vectors `g_k` with
/// `<g_k|g_l> = M_kl`.
///
/// The vectors live in a space whose dimension is the numerical rank of `M`
/// (eigenvalues above `tol × λ_max`). They are brought into echelon
/// (Cholesky-like) form, so `g_1` has a single nonzero real component, `g_2`
/// at most two, and so on; the leading entry of every echelon row is real and
/// nonnegative.
pub fn psd_factor<T: Real>(m: &ComplexMatrix<T>, tol: T) -> Result<Vec<Vec<C<T>>>> {
    m.require_square()?;
    let spec = hermitian_eig(m)?;
    let floor = -tol * m.frobenius_norm();
    if spec.min() < floor {
        return Err(Error::NotPsd {
            min_eigenvalue: spec.min().as_f64(),
        });
    }
    Ok(factor_spectrum(&spec, tol))
}

/// Gram factor from an eigendecomposition without a PSD check; negative
/// eigenvalues inside the kept rank are clamped to zero.
pub(crate) fn factor_spectrum<T: Real>(spec: &Spectrum<T>, tol: T) -> Vec<Vec<C<T>>> {
    let d = spec.len();
    let r = spec.rank(tol).max(1);
    // g_k[i] = sqrt(λ_i) conj(v_i[k])
    let mut g = ComplexMatrix::from_fn(r, d, |i, k| {
        spec.eigenvectors[(k, i)].conj() * spec.eigenvalues[i].max(T::zero()).sqrt()
    });
    echelonize(&mut g);
    (0..d).map(|k| g.column(k)).collect()
}

/// Left-multiplies `g` by a unitary bringing it to row-echelon form with real
/// nonnegative pivots (complex Householder reflections).
fn echelonize<T: Real>(g: &mut ComplexMatrix<T>) {
    let (rows, cols) = (g.rows(), g.cols());
    let scale = g.frobenius_norm();
    let tiny = T::epsilon() * T::lit(16.0) * scale;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let x: Vec<C<T>> = (row..rows).map(|r| g[(r, col)]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm <= tiny {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > T::zero() {
            x0 / x0.norm()
        } else {
            cre(T::one())
        };
        // H x = alpha e1 with alpha = -phase·‖x‖
        let alpha = -phase * norm;
        let mut v = x.clone();
        v[0] = v[0] - alpha;
        let vnorm2: T = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for c in 0..cols {
                let dot: C<T> = v
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| vi.conj() * g[(row + i, c)])
                    .sum();
                let f = dot * two / vnorm2;
                for (i, vi) in v.iter().enumerate() {
                    g[(row + i, c)] = g[(row + i, c)] - *vi * f;
                }
            }
        }
        let p = g[(row, col)];
        if p.norm() > T::zero() {
            let rot = p.conj() / p.norm();
            for c in 0..cols {
                g[(row, c)] = g[(row, c)] * rot;
            }
            g[(row, col)] = cre(g[(row, col)].norm());
        }
        for r in (row + 1)..rows {
            g[(r, col)] = cz();
        }
        row += 1;
    }
}

/// Gram matrix `G_kl = <g_k|g_l>` of a family of vectors.
pub fn gram_matrix<T: Real>(vectors: &[Vec<C<T>>]) -> ComplexMatrix<T> {
    let n = vectors.len();
    ComplexMatrix::from_fn(n, n, |k, l| inner(&vectors[k], &vectors[l]))
}

/// `<u|v>` (conjugate-linear in the first argument).
pub fn inner<T: Real>(u: &[C<T>], v: &[C<T>]) -> C<T> {
    u.iter().zip(v).map(|(a, b)| a.conj() * *b).sum()
}

pub fn norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

fn check_state<T: Real>(rho: &ComplexMatrix<T>) -> Result<Spectrum<T>> {
    let spec = hermitian_eig(rho)?;
    let tr = rho.trace().re;
    if (tr - T::one()).abs() > T::trace_tol() {
        return Err(Error::NotNormalized { trace: tr.as_f64() });
    }
    if spec.min() < -T::default_tol() {
        return Err(Error::NotPsd {
            min_eigenvalue: spec.min().as_f64(),
        });
    }
    Ok(spec)
}

/// Entropy in bits of a spectrum; eigenvalues at or below the cutoff are
/// dropped.
pub fn entropy_of_eigenvalues<T: Real>(eigs: &[T]) -> T {
    let cut = T::entropy_cutoff();
    let s: T = eigs
        .iter()
        .filter(|&&l| l > cut)
        .map(|&l| -l * l.log2())
        .sum();
    s.max(T::zero())
}

/// Von Neumann entropy `-Tr ρ log2 ρ` of a density matrix, in bits.
pub fn von_neumann_entropy<T: Real>(rho: &ComplexMatrix<T>) -> Result<T> {
    let spec = check_state(rho)?;
    let d = T::from_usize_lossy(rho.rows());
    Ok(entropy_of_eigenvalues(&spec.eigenvalues).min(d.log2()))
}

/// Entropy of `M / Tr M` for a PSD matrix with arbitrary positive trace.
pub fn von_neumann_entropy_normalized<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    let tr = m.trace().re;
    if tr <= T::zero() {
        return Err(Error::NotNormalized { trace: tr.as_f64() });
    }
    von_neumann_entropy(&m.scale_real(T::one() / tr))
}

fn sqrt_psd<T: Real>(spec: &Spectrum<T>) -> ComplexMatrix<T> {
    let cut = T::sqrt_cutoff() * spec.max().max(T::one());
    spec.apply_fn(|l| if l > cut { l.sqrt() } else { T::zero() })
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
///
/// When either argument is numerically pure the closed form `<ψ|σ|ψ>` is used;
/// it is exact and avoids square roots of eigenvalues at the noise floor.
pub fn state_fidelity<T: Real>(rho: &ComplexMatrix<T>, sigma: &ComplexMatrix<T>) -> Result<T> {
    if rho.rows() != sigma.rows() {
        return Err(Error::DimensionMismatch {
            expected: rho.rows(),
            found: sigma.rows(),
        });
    }
    let sr = check_state(rho)?;
    let ss = check_state(sigma)?;
    let pure = |s: &Spectrum<T>| s.len() < 2 || s.eigenvalues[1] <= T::sqrt_cutoff();
    let overlap = |s: &Spectrum<T>, other: &ComplexMatrix<T>| -> Result<T> {
        let psi = s.vector(0);
        let o_psi = other.matvec(&psi)?;
        Ok(inner(&psi, &o_psi).re * s.max())
    };
    let f = if pure(&sr) {
        overlap(&sr, sigma)?
    } else if pure(&ss) {
        overlap(&ss, rho)?
    } else {
        let root = sqrt_psd(&sr);
        let inner_m = root.matmul(sigma)?.matmul(&root)?.hermitian_part();
        let spec = hermitian_eig(&inner_m)?;
        let cut = T::sqrt_cutoff();
        let tr: T = spec
            .eigenvalues
            .iter()
            .filter(|&&l| l > cut)
            .map(|&l| l.sqrt())
            .sum();
        tr * tr
    };
    Ok(f.max(T::zero()).min(T::one()))
}
