//! Decoherence channels in Schur form.
//!
//! A channel preserving every operator diagonal in the computational basis
//! acts on observables as `O ↦ ξ ∘ O` and on states as `ρ ↦ ξᵀ ∘ ρ`, where `ξ`
//! is a correlation matrix (PSD with unit diagonal). It is a decoherence map
//! proper when every off-diagonal `|ξ_kl|` is strictly below one; otherwise it
//! sits on the border of that set (e.g. a diagonal unitary).

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix, Spectrum};
use crate::scalar::{cre, cz, Real, C};

/// PSD matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T: Real> {
    xi: ComplexMatrix<T>,
    rank: usize,
}

/// Checks that `m` is a correlation matrix and records its numerical rank.
///
/// `tol` bounds the Hermitian defect (relative to `1 + max |m_kl|`), the
/// distance of each diagonal entry from one, and the most negative eigenvalue
/// (relative to `‖m‖_F`). Eigenvalues at or below `tol × λ_max` do not count
/// towards the rank.
pub fn validate_correlation<T: Real>(m: &ComplexMatrix<T>, tol: T) -> Result<CorrelationMatrix<T>> {
    let d = m.require_square()?;
    if !m.is_hermitian(tol) {
        return Err(Error::NotHermitian {
            max_asymmetry: m.hermitian_defect().as_f64(),
        });
    }
    for k in 0..d {
        let z = m[(k, k)];
        if (z - cre(T::one())).norm() > tol {
            return Err(Error::DiagonalNotUnit {
                index: k,
                value: z.re.as_f64(),
            });
        }
    }
    let mut xi = m.hermitian_part();
    for k in 0..d {
        xi[(k, k)] = cre(T::one());
    }
    let spec = hermitian_eig(&xi)?;
    if spec.min() < -tol * xi.frobenius_norm() {
        return Err(Error::NotPsd {
            min_eigenvalue: spec.min().as_f64(),
        });
    }
    Ok(CorrelationMatrix {
        rank: spec.rank(tol),
        xi,
    })
}

impl<T: Real> CorrelationMatrix<T> {
    /// Wraps a matrix known to be a correlation matrix (e.g. a Schur product
    /// of two of them) and recomputes its rank.
    pub(crate) fn from_trusted(xi: ComplexMatrix<T>) -> Self {
        let rank = hermitian_eig(&xi)
            .map(|s| s.rank(T::default_tol()))
            .unwrap_or(xi.rows());
        Self { xi, rank }
    }

    /// All-ones matrix: the identity channel.
    pub fn ones(d: usize) -> Self {
        Self {
            xi: ComplexMatrix::ones(d),
            rank: 1,
        }
    }

    /// Identity matrix: one-step complete dephasing.
    pub fn identity(d: usize) -> Self {
        Self {
            xi: ComplexMatrix::identity(d),
            rank: d,
        }
    }

    pub fn dim(&self) -> usize {
        self.xi.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.xi
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.xi
    }

    /// Numerical rank recorded at validation.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        hermitian_eig(&self.xi).expect("correlation matrices are Hermitian")
    }

    /// Largest off-diagonal modulus (0 for d = 1).
    pub fn max_off_diagonal(&self) -> T {
        let d = self.dim();
        let mut m = T::zero();
        for k in 0..d {
            for l in 0..d {
                if k != l {
                    m = m.max(self.xi[(k, l)].norm());
                }
            }
        }
        m
    }

    /// Entrywise product; again a correlation matrix (Schur product theorem).
    pub fn schur_product(&self, other: &Self) -> Result<Self> {
        Ok(Self::from_trusted(self.xi.hadamard(&other.xi)?))
    }
}

/// Whether a channel is a decoherence map proper or a border map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelClass {
    /// All off-diagonal `|ξ_kl| < 1`: iterates converge to the diagonal.
    StrictDecoherence,
    /// Some off-diagonal `|ξ_kl| = 1`: preserves the classical algebra but
    /// leaves some coherence untouched forever.
    Border,
}

/// Channel `O ↦ ξ ∘ O` in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurChannel<T: Real> {
    xi: CorrelationMatrix<T>,
    strict: bool,
}

impl<T: Real> SchurChannel<T> {
    pub fn new(xi: CorrelationMatrix<T>) -> Self {
        let strict = xi.max_off_diagonal() < T::one() - T::default_tol();
        Self { xi, strict }
    }

    /// Validates `m` with the default tolerance and wraps it.
    pub fn from_matrix(m: &ComplexMatrix<T>) -> Result<Self> {
        Ok(Self::new(validate_correlation(m, T::default_tol())?))
    }

    pub fn identity(d: usize) -> Self {
        Self::new(CorrelationMatrix::ones(d))
    }

    pub fn complete_dephasing(d: usize) -> Self {
        Self::new(CorrelationMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.xi.dim()
    }

    pub fn correlation(&self) -> &CorrelationMatrix<T> {
        &self.xi
    }

    pub fn xi(&self) -> &ComplexMatrix<T> {
        self.xi.matrix()
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn class(&self) -> ChannelClass {
        if self.strict {
            ChannelClass::StrictDecoherence
        } else {
            ChannelClass::Border
        }
    }

    /// `ρ ↦ ξᵀ ∘ ρ`, i.e. `[out]_kl = ξ_lk ρ_kl`.
    pub fn apply_schrodinger(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        rho.matrix().require_dim(self.dim())?;
        let xi = self.xi();
        let out = ComplexMatrix::from_fn(self.dim(), self.dim(), |k, l| xi[(l, k)] * rho.matrix()[(k, l)]);
        Ok(DensityMatrix::from_raw(out))
    }

    /// `O ↦ ξ ∘ O`.
    pub fn apply_heisenberg(&self, o: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        o.require_dim(self.dim())?;
        self.xi().hadamard(o)
    }

    /// The `n`-fold iterate, with correlation matrix `ξ^{∘n}`.
    pub fn iterate(&self, n: u32) -> Self {
        let xi = self.xi().map(|z| z.powu(n));
        Self::new(CorrelationMatrix::from_trusted(xi))
    }

    /// Sequential composition; commutes exactly.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self::new(self.xi.schur_product(&other.xi)?))
    }

    /// Canonical Kraus operators from the spectral decomposition of `ξ`.
    ///
    /// With `ξ = Σ_i λ_i |v_i><v_i|`, operator `i` is
    /// `E_i = Σ_k √λ_i conj(v_i[k]) |k><k|`, so that `Σ_i E_i† O E_i = ξ ∘ O`.
    /// Eigenvalues at or below `1e-10 × λ_max` are discarded.
    pub fn canonical_kraus(&self) -> KrausSet<T> {
        let spec = self.xi.spectrum();
        let r = spec.rank(T::default_tol()).max(1);
        let operators = (0..r)
            .map(|i| {
                let s = spec.eigenvalues[i].max(T::zero()).sqrt();
                let diag: Vec<C<T>> = spec.vector(i).iter().map(|z| z.conj() * s).collect();
                ComplexMatrix::from_diag(&diag)
            })
            .collect();
        KrausSet {
            operators,
            canonical: true,
        }
    }
}

/// Kraus operators `{E_i}` of a channel acting as `O ↦ Σ E_i† O E_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet<T: Real> {
    pub operators: Vec<ComplexMatrix<T>>,
    pub canonical: bool,
}

impl<T: Real> KrausSet<T> {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Diagonal of operator `i`.
    pub fn diagonal(&self, i: usize) -> Vec<C<T>> {
        self.operators[i].diagonal()
    }

    /// `‖Σ E_i† E_i − 1‖_F`.
    pub fn completeness_defect(&self) -> T {
        let d = self.operators[0].rows();
        let mut acc = ComplexMatrix::zeros(d, d);
        for e in &self.operators {
            acc = acc
                .add(&e.adjoint().matmul(e).expect("square"))
                .expect("same shape");
        }
        acc.sub(&ComplexMatrix::identity(d))
            .expect("same shape")
            .frobenius_norm()
    }

    /// `Σ E_i† O E_i`.
    pub fn apply_heisenberg(&self, o: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let mut acc = ComplexMatrix::zeros(o.rows(), o.cols());
        for e in &self.operators {
            acc = acc.add(&e.adjoint().matmul(o)?.matmul(e)?)?;
        }
        Ok(acc)
    }

    /// `Σ E_i ρ E_i†`.
    pub fn apply_schrodinger(&self, rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let mut acc = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for e in &self.operators {
            acc = acc.add(&e.matmul(rho)?.matmul(&e.adjoint())?)?;
        }
        Ok(acc)
    }

    /// Whether every operator is diagonal within `tol`.
    pub fn all_diagonal(&self, tol: T) -> bool {
        self.operators.iter().all(|e| {
            (0..e.rows()).all(|r| (0..e.cols()).all(|c| r == c || e[(r, c)].norm() <= tol))
        })
    }
}

/// Density matrix: Hermitian, PSD and unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    rho: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates `m` as a state (trace within [`Real::trace_tol`], PSD within
    /// [`Real::default_tol`]).
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        m.require_square()?;
        if !m.is_hermitian(T::default_tol()) {
            return Err(Error::NotHermitian {
                max_asymmetry: m.hermitian_defect().as_f64(),
            });
        }
        let tr = m.trace().re;
        if (tr - T::one()).abs() > T::trace_tol() {
            return Err(Error::NotNormalized { trace: tr.as_f64() });
        }
        let m = m.hermitian_part();
        let spec = hermitian_eig(&m)?;
        if spec.min() < -T::default_tol() {
            return Err(Error::NotPsd {
                min_eigenvalue: spec.min().as_f64(),
            });
        }
        Ok(Self { rho: m })
    }

    pub(crate) fn from_raw(rho: ComplexMatrix<T>) -> Self {
        Self { rho }
    }

    /// `|ψ><ψ| / <ψ|ψ>`.
    pub fn pure(psi: &[C<T>]) -> Result<Self> {
        let n = crate::numerics::norm(psi);
        if !(n > T::zero()) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v: Vec<C<T>> = psi.iter().map(|z| z / n).collect();
        Ok(Self {
            rho: ComplexMatrix::outer(&v, &v),
        })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            rho: ComplexMatrix::identity(d).scale_real(T::one() / T::from_usize_lossy(d)),
        }
    }

    /// `diag(p)` for a probability vector.
    pub fn classical(p: &[T]) -> Result<Self> {
        check_probabilities(p)?;
        let diag: Vec<C<T>> = p.iter().map(|&x| cre(x)).collect();
        Ok(Self {
            rho: ComplexMatrix::from_diag(&diag),
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.rho
    }

    pub fn populations(&self) -> Vec<T> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    /// Conjugation `U ρ U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        Ok(Self {
            rho: u.matmul(&self.rho)?.matmul(&u.adjoint())?,
        })
    }
}

pub(crate) fn check_probabilities<T: Real>(p: &[T]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidProbabilityVector {
            reason: "empty".into(),
        });
    }
    if let Some(i) = p.iter().position(|&x| !(x >= T::zero())) {
        return Err(Error::InvalidProbabilityVector {
            reason: format!("entry {i} is negative or NaN"),
        });
    }
    let s: T = p.iter().copied().sum();
    if (s - T::one()).abs() > T::trace_tol() {
        return Err(Error::InvalidProbabilityVector {
            reason: format!("entries sum to {}", s.as_f64()),
        });
    }
    Ok(())
}

/// The completely decohered state `Σ_k ρ_kk |k><k|`.
pub fn dephase_limit<T: Real>(rho: &DensityMatrix<T>) -> DensityMatrix<T> {
    let d = rho.dim();
    let m = rho.matrix();
    DensityMatrix::from_raw(ComplexMatrix::from_fn(d, d, |k, l| if k == l { m[(k, k)] } else { cz() }))
}

fn projector_tol<T: Real>() -> T {
    T::default_tol()
}

/// Block (partial) decoherence `O ↦ Σ_{kl} ξ_kl P_k O P_l` for orthogonal
/// projectors `P_k` summing to the identity.
///
/// `xi` is indexed by blocks. With rank-one projectors onto the computational
/// basis this reduces to the Schur action `ξ ∘ O`.
pub fn apply_partial_decoherence<T: Real>(
    xi: &CorrelationMatrix<T>,
    projectors: &[ComplexMatrix<T>],
    o: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    if xi.dim() != projectors.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.dim(),
            found: projectors.len(),
        });
    }
    let d = o.require_square()?;
    let tol = projector_tol::<T>();
    for (i, p) in projectors.iter().enumerate() {
        p.require_dim(d)?;
        let sq = p.matmul(p)?;
        if sq.sub(p)?.max_abs() > tol || p.hermitian_defect() > tol {
            return Err(Error::NotProjector { index: i });
        }
    }
    for i in 0..projectors.len() {
        for j in (i + 1)..projectors.len() {
            if projectors[i].matmul(&projectors[j])?.max_abs() > tol {
                return Err(Error::ProjectorsNotOrthogonal { first: i, second: j });
            }
        }
    }
    let mut total = ComplexMatrix::zeros(d, d);
    for p in projectors {
        total = total.add(p)?;
    }
    let defect = total.sub(&ComplexMatrix::identity(d))?.max_abs();
    if defect > tol {
        return Err(Error::ProjectorsIncomplete {
            defect: defect.as_f64(),
        });
    }
    let mut out = ComplexMatrix::zeros(d, d);
    let xm = xi.matrix();
    for (k, pk) in projectors.iter().enumerate() {
        let left = pk.matmul(o)?;
        for (l, pl) in projectors.iter().enumerate() {
            let coeff = xm[(k, l)];
            if coeff == cz() {
                continue;
            }
            out = out.add(&left.matmul(pl)?.scale(coeff))?;
        }
    }
    Ok(out)
}
