//! Recoverability: extremality certificates and random-unitary decompositions.
//!
//! A Schur channel can be undone by measuring its environment exactly when it
//! is a mixture of diagonal unitaries, `ξ = Σ_i p_i |φ_i><φ_i|` with every
//! `|φ_i>` unimodular. Extremal channels with two or more canonical Kraus
//! operators admit no such mixture, which gives a sound impossibility
//! certificate. Otherwise the decomposition is constructed exactly for qubits
//! and searched for numerically in higher dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::SchurChannel;
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, inner, norm, singular_values, ComplexMatrix, Spectrum};
use crate::optimize::{levenberg_marquardt, nelder_mead, LeastSquaresOptions, NelderMeadOptions};
use crate::random::sub_seed;
use crate::scalar::{cis, cre, shannon_bits, wrap_phase, Real, C};

/// Unimodular vector `Σ_k e^{iφ_k}|k>` stored by its phases, gauge `φ_1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector<T: Real> {
    phases: Vec<T>,
}

impl<T: Real> PhaseVector<T> {
    /// Removes the global phase and wraps every entry into `[0, 2π)`.
    pub fn new(phases: Vec<T>) -> Self {
        let first = phases.first().copied().unwrap_or_else(T::zero);
        Self {
            phases: phases.iter().map(|&p| wrap_phase(p - first)).collect(),
        }
    }

    /// Phases of a (nearly) unimodular vector; moduli are ignored.
    pub fn from_vector(v: &[C<T>]) -> Self {
        let v0 = v[0];
        Self {
            phases: v.iter().map(|z| wrap_phase((*z * v0.conj()).arg())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn vector(&self) -> Vec<C<T>> {
        self.phases.iter().map(|&p| cis(p)).collect()
    }

    /// The diagonal unitary `U = diag(e^{iφ_k})`.
    pub fn unitary(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_diag(&self.vector())
    }
}

/// `ξ = Σ_i p_i |φ_i><φ_i|` with unimodular `|φ_i>`.
///
/// With `U_i = diag(e^{iφ_i})` the channel acts as `O ↦ Σ_i p_i U_i O U_i†` on
/// observables and `ρ ↦ Σ_i p_i U_i† ρ U_i` on states.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomUnitaryDecomposition<T: Real> {
    weights: Vec<T>,
    phase_vectors: Vec<PhaseVector<T>>,
}

impl<T: Real> RandomUnitaryDecomposition<T> {
    pub fn new(weights: Vec<T>, phase_vectors: Vec<PhaseVector<T>>) -> Result<Self> {
        if weights.len() != phase_vectors.len() || weights.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: phase_vectors.len(),
            });
        }
        let d = phase_vectors[0].dim();
        if let Some(bad) = phase_vectors.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.dim(),
            });
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::InvalidProbabilityVector {
                reason: "weights must be strictly positive".into(),
            });
        }
        crate::channel::check_probabilities(&weights)?;
        Ok(Self {
            weights,
            phase_vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.phase_vectors[0].dim()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn phase_vectors(&self) -> &[PhaseVector<T>] {
        &self.phase_vectors
    }

    pub fn unitaries(&self) -> Vec<ComplexMatrix<T>> {
        self.phase_vectors.iter().map(PhaseVector::unitary).collect()
    }

    /// `Σ p_i |φ_i><φ_i|`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (w, pv) in self.weights.iter().zip(&self.phase_vectors) {
            let v = pv.vector();
            acc = acc
                .add(&ComplexMatrix::outer(&v, &v).scale_real(*w))
                .expect("same shape");
        }
        acc
    }

    /// Shannon entropy of the weights in bits.
    pub fn entropy_bits(&self) -> T {
        shannon_bits(&self.weights)
    }

    /// `G_ij = Tr[U_i U_j†] / d`.
    pub fn unitary_gram(&self) -> ComplexMatrix<T> {
        let n = self.len();
        let d = T::from_usize_lossy(self.dim());
        let vs: Vec<Vec<C<T>>> = self.phase_vectors.iter().map(PhaseVector::vector).collect();
        ComplexMatrix::from_fn(n, n, |i, j| inner(&vs[j], &vs[i]) / d)
    }
}

/// Choi extremality verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Extremal,
    NotExtremal,
}

/// Linear-independence data for the products `E_i† E_j` of the canonical
/// Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalityCertificate<T: Real> {
    pub kraus_rank: usize,
    /// Rank of the `r² × d` matrix whose rows are the diagonals of `E_i† E_j`.
    pub gram_rank: usize,
    pub singular_values: Vec<T>,
    pub tol: T,
    pub verdict: Verdict,
    /// Set only for extremal channels with `r ≥ 2` whose counted singular
    /// values all clear `10 × tol × σ_max`.
    pub not_random_unitary: bool,
}

impl<T: Real> ExtremalityCertificate<T> {
    /// Extremal channels satisfy `r² ≤ d`.
    pub fn rank_bound_holds(&self, d: usize) -> bool {
        self.verdict == Verdict::NotExtremal || self.kraus_rank * self.kraus_rank <= d
    }
}

/// Choi extremality test specialised to diagonal Kraus operators.
pub fn extremality_test<T: Real>(ch: &SchurChannel<T>, tol: T) -> ExtremalityCertificate<T> {
    let kraus = ch.canonical_kraus();
    let r = kraus.len();
    let d = ch.dim();
    let diags: Vec<Vec<C<T>>> = (0..r).map(|i| kraus.diagonal(i)).collect();
    let products = ComplexMatrix::from_fn(r * r, d, |row, k| {
        let (i, j) = (row / r, row % r);
        diags[i][k].conj() * diags[j][k]
    });
    let sv = singular_values(&products);
    let smax = sv.first().copied().unwrap_or_else(T::zero);
    let counted: Vec<T> = sv.iter().copied().filter(|&s| s > tol * smax).collect();
    let gram_rank = counted.len();
    let verdict = if gram_rank == r * r {
        Verdict::Extremal
    } else {
        Verdict::NotExtremal
    };
    let margin_ok = counted
        .iter()
        .all(|&s| s > T::lit(10.0) * tol * smax);
    debug_assert!(verdict == Verdict::NotExtremal || r * r <= d);
    ExtremalityCertificate {
        kraus_rank: r,
        gram_rank,
        singular_values: sv,
        tol,
        verdict,
        not_random_unitary: verdict == Verdict::Extremal && r >= 2 && margin_ok,
    }
}

/// Exact orthogonal decomposition of a qubit channel.
///
/// For `ξ_12 = |c| e^{iθ}` the two unimodular eigenvectors of `ξ` are
/// `(1, e^{-iθ})` and `(1, -e^{-iθ})` with weights `(1 ± |c|)/2`. Zero
/// weights are dropped.
pub fn ru_decompose_qubit<T: Real>(ch: &SchurChannel<T>) -> Result<RandomUnitaryDecomposition<T>> {
    if ch.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: ch.dim(),
        });
    }
    let c = ch.xi()[(0, 1)];
    let m = c.norm().min(T::one());
    let theta = if m > T::zero() { c.arg() } else { T::zero() };
    let half = T::lit(0.5);
    let terms = [
        ((T::one() + m) * half, PhaseVector::new(vec![T::zero(), -theta])),
        ((T::one() - m) * half, PhaseVector::new(vec![T::zero(), T::PI() - theta])),
    ];
    let (weights, pvs): (Vec<T>, Vec<PhaseVector<T>>) = terms
        .into_iter()
        .filter(|(w, _)| *w > T::zero())
        .unzip();
    RandomUnitaryDecomposition::new(weights, pvs)
}

/// Quality report of a decomposition against a channel.
#[derive(Debug, Clone)]
pub struct ResidualReport<T: Real> {
    /// `‖ξ − Σ p_i |φ_i><φ_i|‖_F`.
    pub residual: T,
    pub entropy_bits: T,
    /// `Tr[U_i U_j†] / d`.
    pub unitary_gram: ComplexMatrix<T>,
}

pub fn verify_decomposition<T: Real>(
    dec: &RandomUnitaryDecomposition<T>,
    ch: &SchurChannel<T>,
) -> Result<ResidualReport<T>> {
    if dec.dim() != ch.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim(),
            found: dec.dim(),
        });
    }
    Ok(ResidualReport {
        residual: dec.reconstruct().sub(ch.xi())?.frobenius_norm(),
        entropy_bits: dec.entropy_bits(),
        unitary_gram: dec.unitary_gram(),
    })
}

/// True iff `|Tr[U_i U_j†]| / d ≤ tol` for all `i ≠ j`.
pub fn orthogonality_check<T: Real>(dec: &RandomUnitaryDecomposition<T>, tol: T) -> bool {
    let g = dec.unitary_gram();
    (0..dec.len()).all(|i| (0..dec.len()).all(|j| i == j || g[(i, j)].norm() <= tol))
}

/// Parameters of [`ru_decompose_search`].
#[derive(Debug, Clone)]
pub struct SearchConfig<T> {
    /// Multi-start count per optimization.
    pub starts: usize,
    pub residual_tol: T,
    pub min_weight: T,
    pub seed: u64,
    /// Cap on the number of terms; `None` means `4d`.
    pub max_terms: Option<usize>,
    /// Eigenvector `v` (normalised to `‖v‖² = d`) counts as unimodular when
    /// `max_k ||v_k| − 1| ≤ unimodular_tol`.
    pub unimodular_tol: T,
}

impl<T: Real> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            starts: 64,
            residual_tol: T::lit(1e-8).max(T::default_tol() * T::lit(100.0)),
            min_weight: T::default_tol(),
            seed: 0,
            max_terms: None,
            unimodular_tol: T::lit(1e-8).max(T::default_tol() * T::lit(100.0)),
        }
    }
}

impl<T: Real> SearchConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Which construction produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    QubitExact,
    Spectral,
    Peeling,
    DirectFit,
}

#[derive(Debug, Clone)]
pub struct SearchSuccess<T: Real> {
    pub decomposition: RandomUnitaryDecomposition<T>,
    pub residual: T,
    pub method: Method,
}

#[derive(Debug, Clone)]
pub enum SearchFailure<T: Real> {
    /// The channel is extremal with at least two Kraus operators.
    NotRandomUnitary(ExtremalityCertificate<T>),
    /// Nothing found; says nothing about existence.
    Inconclusive { best_residual: T },
}

/// Searches for a random-unitary decomposition.
///
/// Order of attempts: the extremality certificate (fails fast with
/// `NotRandomUnitary`), the exact qubit formula, the spectral decomposition
/// when every eigenvector is unimodular, greedy extreme-point peeling, and a
/// direct least-squares fit with `rank(ξ)` and `rank(ξ)+1` terms. The result
/// is a deterministic function of `(ch, config)`.
pub fn ru_decompose_search<T: Real>(
    ch: &SchurChannel<T>,
    config: &SearchConfig<T>,
) -> std::result::Result<SearchSuccess<T>, SearchFailure<T>> {
    let d = ch.dim();
    let xi = ch.xi();
    if d == 1 {
        let dec = RandomUnitaryDecomposition::new(vec![T::one()], vec![PhaseVector::new(vec![T::zero()])])
            .expect("valid");
        return Ok(SearchSuccess {
            decomposition: dec,
            residual: T::zero(),
            method: Method::QubitExact,
        });
    }
    let cert = extremality_test(ch, T::default_tol());
    if cert.not_random_unitary {
        return Err(SearchFailure::NotRandomUnitary(cert));
    }
    let mut best_residual = T::infinity();
    let mut accept = |weights: Vec<T>, pvs: Vec<PhaseVector<T>>, method: Method| {
        let dec = finalize(weights, pvs, config.min_weight)?;
        let residual = dec.reconstruct().sub(xi).ok()?.frobenius_norm();
        best_residual = best_residual.min(residual);
        (residual <= config.residual_tol).then_some(SearchSuccess {
            decomposition: dec,
            residual,
            method,
        })
    };

    if d == 2 {
        if let Ok(dec) = ru_decompose_qubit(ch) {
            let (w, p) = (dec.weights, dec.phase_vectors);
            if let Some(s) = accept(w, p, Method::QubitExact) {
                return Ok(s);
            }
        }
    }
    let spec = ch.correlation().spectrum();
    if let Some((w, p)) = spectral_candidate(&spec, config) {
        if let Some(s) = accept(w, p, Method::Spectral) {
            return Ok(s);
        }
    }
    if let Some((w, p)) = peel(xi, config) {
        if let Some(s) = accept(w, p, Method::Peeling) {
            return Ok(s);
        }
    }
    let rank = ch.correlation().rank().max(1);
    let cap = config.max_terms.unwrap_or(4 * d);
    for k in rank..=(rank + 1).min(cap) {
        if let Some((w, p)) = direct_fit(xi, k, config) {
            if let Some(s) = accept(w, p, Method::DirectFit) {
                return Ok(s);
            }
        }
    }
    Err(SearchFailure::Inconclusive { best_residual })
}

fn finalize<T: Real>(
    weights: Vec<T>,
    pvs: Vec<PhaseVector<T>>,
    min_weight: T,
) -> Option<RandomUnitaryDecomposition<T>> {
    let (w, p): (Vec<T>, Vec<PhaseVector<T>>) = weights
        .into_iter()
        .zip(pvs)
        .filter(|(w, _)| *w >= min_weight)
        .unzip();
    let total: T = w.iter().copied().sum();
    if w.is_empty() || !(total > T::zero()) {
        return None;
    }
    let w = w.into_iter().map(|x| x / total).collect();
    RandomUnitaryDecomposition::new(w, p).ok()
}

/// Maximal deviation of `|v_k|` from one after scaling `‖v‖² = d`.
fn unimodular_defect<T: Real>(v: &[C<T>]) -> T {
    let scale = T::from_usize_lossy(v.len()).sqrt() / norm(v);
    v.iter()
        .map(|z| (z.norm() * scale - T::one()).abs())
        .fold(T::zero(), T::max)
}

fn spectral_candidate<T: Real>(
    spec: &Spectrum<T>,
    config: &SearchConfig<T>,
) -> Option<(Vec<T>, Vec<PhaseVector<T>>)> {
    let r = spec.rank(T::default_tol()).max(1);
    let d = T::from_usize_lossy(spec.len());
    let mut weights = Vec::with_capacity(r);
    let mut pvs = Vec::with_capacity(r);
    for i in 0..r {
        let v = spec.vector(i);
        if unimodular_defect(&v) > config.unimodular_tol {
            return None;
        }
        weights.push(spec.eigenvalues[i] / d);
        pvs.push(PhaseVector::from_vector(&v));
    }
    Some((weights, pvs))
}

fn phase_vec<T: Real>(free: &[T]) -> Vec<C<T>> {
    std::iter::once(cre(T::one()))
        .chain(free.iter().map(|&t| cis(t)))
        .collect()
}

fn quad_form<T: Real>(m: &ComplexMatrix<T>, v: &[C<T>]) -> T {
    let mv = m.matvec(v).expect("dims agree");
    inner(v, &mv).re
}

/// Unit-diagonal congruence `D^{-1/2} X D^{-1/2}` after clamping eigenvalues at
/// or below `cut × λ_max` to zero.
fn clean_remainder<T: Real>(x: &ComplexMatrix<T>, cut: T) -> Option<ComplexMatrix<T>> {
    let spec = hermitian_eig(&x.hermitian_part()).ok()?;
    let floor = cut * spec.max();
    let cleaned = spec.apply_fn(|l| if l > floor { l } else { T::zero() });
    let d = x.rows();
    let diag: Vec<T> = (0..d).map(|k| cleaned[(k, k)].re).collect();
    if diag.iter().any(|&v| !(v > T::zero())) {
        return None;
    }
    let mut out = ComplexMatrix::from_fn(d, d, |k, l| cleaned[(k, l)] / (diag[k] * diag[l]).sqrt());
    for k in 0..d {
        out[(k, k)] = cre(T::one());
    }
    Some(out)
}

struct PeelCandidate<T: Real> {
    phi: Vec<C<T>>,
    t: T,
}

/// Best unimodular `φ` in the range of `x` maximizing the peelable weight
/// `t(φ) = 1 / <φ|x⁺|φ>`, over seeded multi-starts.
fn best_peel<T: Real>(
    x: &ComplexMatrix<T>,
    spec: &Spectrum<T>,
    rank: usize,
    config: &SearchConfig<T>,
    step: usize,
) -> Option<PeelCandidate<T>> {
    let d = x.rows();
    let mut pinv = ComplexMatrix::zeros(d, d);
    for i in 0..rank {
        let v = spec.vector(i);
        pinv = pinv
            .add(&ComplexMatrix::outer(&v, &v).scale_real(T::one() / spec.eigenvalues[i]))
            .ok()?;
    }
    let null: Vec<Vec<C<T>>> = (rank..d).map(|i| spec.vector(i)).collect();
    let infeasibility = |phi: &[C<T>]| -> T {
        null.iter().map(|n| inner(n, phi).norm_sqr()).sum::<T>()
    };
    let lam_min = spec.eigenvalues[rank - 1];
    let mu = T::lit(10.0) * T::from_usize_lossy(d) / lam_min.min(T::one());
    let objective = |theta: &[T]| {
        let phi = phase_vec(theta);
        quad_form(&pinv, &phi) + mu * infeasibility(&phi)
    };
    let nm = NelderMeadOptions {
        initial_step: T::lit(0.6),
        max_evals: 600 * d,
        ..NelderMeadOptions::default()
    };
    let ls = LeastSquaresOptions {
        target: T::epsilon(),
        ..LeastSquaresOptions::default()
    };
    let feasible_tol = T::epsilon().sqrt() * T::lit(1e-4);

    let candidates: Vec<Option<PeelCandidate<T>>> = (0..config.starts)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, step as u64, start as u64));
            let theta0: Vec<T> = (1..d)
                .map(|_| T::lit(rng.random::<f64>() * std::f64::consts::TAU))
                .collect();
            let mut theta = nelder_mead(&objective, &theta0, &nm).x;
            if !null.is_empty() {
                let residual = |th: &[T]| -> Vec<T> {
                    let phi = phase_vec(th);
                    null.iter()
                        .flat_map(|n| {
                            let z = inner(n, &phi);
                            [z.re, z.im]
                        })
                        .collect()
                };
                theta = levenberg_marquardt(residual, &theta, &ls).0;
            }
            let phi = phase_vec(&theta);
            if infeasibility(&phi).sqrt() > feasible_tol {
                return None;
            }
            let q = quad_form(&pinv, &phi);
            if !(q > T::zero()) {
                return None;
            }
            Some(PeelCandidate {
                phi,
                t: (T::one() / q).min(T::one()),
            })
        })
        .collect();

    // highest t wins; earliest start breaks ties
    let mut best: Option<PeelCandidate<T>> = None;
    for c in candidates.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| c.t > b.t) {
            best = Some(c);
        }
    }
    best
}

/// Greedy extreme-point peeling.
fn peel<T: Real>(xi: &ComplexMatrix<T>, config: &SearchConfig<T>) -> Option<(Vec<T>, Vec<PhaseVector<T>>)> {
    let d = xi.rows();
    let max_terms = config.max_terms.unwrap_or(4 * d);
    let rank_tol = config.residual_tol * T::lit(0.1);
    let mut x = xi.clone();
    let mut remaining = T::one();
    let mut weights = Vec::new();
    let mut pvs = Vec::new();
    for step in 0..max_terms {
        let spec = hermitian_eig(&x).ok()?;
        let rank = spec.rank(rank_tol).max(1);
        let top = PhaseVector::from_vector(&spec.vector(0));
        let top_v = top.vector();
        let dist = x.sub(&ComplexMatrix::outer(&top_v, &top_v)).ok()?.frobenius_norm();
        if rank == 1 || dist <= config.residual_tol {
            weights.push(remaining);
            pvs.push(top);
            return Some((weights, pvs));
        }
        if weights.len() + 1 >= max_terms {
            return None;
        }
        let cand = best_peel(&x, &spec, rank, config, step)?;
        let pv = PhaseVector::from_vector(&cand.phi);
        if cand.t >= T::one() - rank_tol {
            weights.push(remaining);
            pvs.push(pv);
            return Some((weights, pvs));
        }
        let v = pv.vector();
        let peeled = x
            .sub(&ComplexMatrix::outer(&v, &v).scale_real(cand.t))
            .ok()?
            .scale_real(T::one() / (T::one() - cand.t));
        x = clean_remainder(&peeled, rank_tol)?;
        weights.push(remaining * cand.t);
        pvs.push(pv);
        remaining = remaining * (T::one() - cand.t);
    }
    None
}

/// Least-squares fit of `k` unimodular terms to `ξ`, weights `p_i = a_i² / Σ a²`.
fn direct_fit<T: Real>(
    xi: &ComplexMatrix<T>,
    k: usize,
    config: &SearchConfig<T>,
) -> Option<(Vec<T>, Vec<PhaseVector<T>>)> {
    let d = xi.rows();
    let free = d - 1;
    let unpack = |x: &[T]| -> (Vec<T>, Vec<Vec<C<T>>>) {
        let a = &x[k * free..];
        let total: T = a.iter().map(|&v| v * v).sum();
        let w: Vec<T> = a.iter().map(|&v| v * v / total).collect();
        let phis = (0..k).map(|i| phase_vec(&x[i * free..(i + 1) * free])).collect();
        (w, phis)
    };
    let residual = |x: &[T]| -> Vec<T> {
        let (w, phis) = unpack(x);
        let mut out = Vec::with_capacity(d * (d - 1));
        for r in 0..d {
            for c in (r + 1)..d {
                let mut z = -xi[(r, c)];
                for (wi, phi) in w.iter().zip(&phis) {
                    z = z + phi[r] * phi[c].conj() * *wi;
                }
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    };
    let ls = LeastSquaresOptions {
        max_iters: 400,
        target: T::epsilon() * T::lit(16.0),
        ..LeastSquaresOptions::default()
    };
    let target = config.residual_tol * T::lit(0.1);
    let chunk = 8;
    let mut start = 0;
    while start < config.starts {
        let end = (start + chunk).min(config.starts);
        let results: Vec<(Vec<T>, T)> = (start..end)
            .into_par_iter()
            .map(|s| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(sub_seed(config.seed ^ 0xD1EC_7F17, k as u64, s as u64));
                let mut x0: Vec<T> = (0..k * free)
                    .map(|_| T::lit(rng.random::<f64>() * std::f64::consts::TAU))
                    .collect();
                x0.extend((0..k).map(|_| T::lit(1.0 + 0.2 * rng.random::<f64>())));
                levenberg_marquardt(residual, &x0, &ls)
            })
            .collect();
        for (x, res) in results {
            if res > target {
                continue;
            }
            let (w, phis) = unpack(&x);
            if w.iter().any(|&v| v < config.min_weight) {
                continue;
            }
            let pvs = phis.iter().map(|p| PhaseVector::from_vector(p)).collect();
            return Some((w, pvs));
        }
        start = end;
    }
    None
}

/// Convenience: decomposition for any channel, exact for qubits.
pub fn decompose<T: Real>(
    ch: &SchurChannel<T>,
    config: &SearchConfig<T>,
) -> std::result::Result<SearchSuccess<T>, SearchFailure<T>> {
    ru_decompose_search(ch, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexMatrix;
    use crate::random::{random_correlation, random_phases, random_probabilities, unimodular};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    type M = ComplexMatrix<f64>;
    type Ch = SchurChannel<f64>;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn extremal_xi() -> M {
        let r = FRAC_1_SQRT_2;
        M::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0), c(r, 0.0), c(r, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(r, 0.0), c(0.0, r)],
            vec![c(r, 0.0), c(r, 0.0), c(1.0, 0.0), c(0.5, 0.5)],
            vec![c(r, 0.0), c(0.0, -r), c(0.5, -0.5), c(1.0, 0.0)],
        ])
        .unwrap()
    }

    fn gap_xi() -> M {
        let r = FRAC_1_SQRT_2;
        M::from_real(&[&[1.0, 0.0, r], &[0.0, 1.0, r], &[r, r, 1.0]]).unwrap()
    }

    fn planted(weights: &[f64], phases: &[Vec<f64>]) -> M {
        let d = phases[0].len();
        let mut acc = M::zeros(d, d);
        for (w, ph) in weights.iter().zip(phases) {
            let v = unimodular(ph);
            acc = acc.add(&M::outer(&v, &v).scale_real(*w)).unwrap();
        }
        acc
    }

    #[test]
    fn extremality_examples() {
        let phi = unimodular(&[0.0, 0.4, 1.3]);
        let cert = extremality_test(&Ch::from_matrix(&M::outer(&phi, &phi)).unwrap(), 1e-10);
        assert_eq!(cert.kraus_rank, 1);
        assert_eq!(cert.verdict, Verdict::Extremal);
        assert!(!cert.not_random_unitary);

        let cert = extremality_test(&Ch::from_matrix(&extremal_xi()).unwrap(), 1e-10);
        assert_eq!((cert.kraus_rank, cert.gram_rank), (2, 4));
        assert_eq!(cert.verdict, Verdict::Extremal);
        assert!(cert.not_random_unitary);

        let cert = extremality_test(&Ch::complete_dephasing(2), 1e-10);
        assert_eq!(cert.kraus_rank, 2);
        assert_eq!(cert.gram_rank, 2);
        assert_eq!(cert.verdict, Verdict::NotExtremal);
        assert!(!cert.not_random_unitary);
    }

    #[test]
    fn qubit_examples() {
        let ch = Ch::from_matrix(&M::from_real(&[&[1.0, 0.6], &[0.6, 1.0]]).unwrap()).unwrap();
        let dec = ru_decompose_qubit(&ch).unwrap();
        assert!((dec.weights()[0] - 0.8).abs() < 1e-15 && (dec.weights()[1] - 0.2).abs() < 1e-15);
        assert_eq!(dec.phase_vectors()[0].phases(), &[0.0, 0.0]);
        assert!((dec.phase_vectors()[1].phases()[1] - PI).abs() < 1e-15);

        let dec = ru_decompose_qubit(&Ch::identity(2)).unwrap();
        assert_eq!(dec.len(), 1);
        assert_eq!(dec.phase_vectors()[0].phases(), &[0.0, 0.0]);

        let mut xi = M::identity(2);
        xi[(0, 1)] = c(0.0, 0.5);
        xi[(1, 0)] = c(0.0, -0.5);
        let ch = Ch::from_matrix(&xi).unwrap();
        let dec = ru_decompose_qubit(&ch).unwrap();
        assert!((dec.weights()[0] - 0.75).abs() < 1e-15);
        // weight 0.75 pairs with eigenvector (1, -i), i.e. phase 3π/2
        assert!((dec.phase_vectors()[0].phases()[1] - 1.5 * PI).abs() < 1e-14);
        assert!((dec.phase_vectors()[1].phases()[1] - 0.5 * PI).abs() < 1e-14);
        assert!(verify_decomposition(&dec, &ch).unwrap().residual < 1e-15);
        assert!(matches!(
            ru_decompose_qubit(&Ch::identity(3)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn qubit_exact_is_orthogonal() {
        let ch = Ch::from_matrix(&M::from_real(&[&[1.0, 0.6], &[0.6, 1.0]]).unwrap()).unwrap();
        let dec = ru_decompose_qubit(&ch).unwrap();
        let rep = verify_decomposition(&dec, &ch).unwrap();
        assert!(rep.residual <= 1e-10);
        assert!(rep.unitary_gram.sub(&M::identity(2)).unwrap().max_abs() < 1e-15);
        assert!(orthogonality_check(&dec, 1e-12));
        let single = ru_decompose_qubit(&Ch::identity(2)).unwrap();
        assert!(orthogonality_check(&single, 1e-12));
    }

    #[test]
    fn corrupted_weights_are_detected() {
        let ch = Ch::from_matrix(&M::from_real(&[&[1.0, 0.6], &[0.6, 1.0]]).unwrap()).unwrap();
        let dec = ru_decompose_qubit(&ch).unwrap();
        let bad = RandomUnitaryDecomposition::new(vec![0.5, 0.5], dec.phase_vectors().to_vec()).unwrap();
        assert!(verify_decomposition(&bad, &ch).unwrap().residual > 0.1);
    }

    #[test]
    fn planted_qutrit_verifies() {
        let w = [0.5, 0.3, 0.2];
        let ph = vec![vec![0.0, 0.3, 2.0], vec![0.0, 4.0, 1.0], vec![0.0, 2.2, 5.5]];
        let xi = planted(&w, &ph);
        let ch = Ch::from_matrix(&xi).unwrap();
        let dec = RandomUnitaryDecomposition::new(
            w.to_vec(),
            ph.into_iter().map(PhaseVector::new).collect(),
        )
        .unwrap();
        assert!(verify_decomposition(&dec, &ch).unwrap().residual <= 1e-12);
    }

    #[test]
    fn search_qutrit_strict_witness() {
        let ch = Ch::from_matrix(&gap_xi()).unwrap();
        let out = ru_decompose_search(&ch, &SearchConfig::with_seed(1)).unwrap();
        let dec = &out.decomposition;
        assert!(out.residual <= 1e-8, "{:?}", out.residual);
        assert!(dec.len() >= 2);
        let s = crate::numerics::von_neumann_entropy(&ch.xi().scale_real(1.0 / 3.0)).unwrap();
        assert!(dec.entropy_bits() - s > 0.01);
        assert!(!orthogonality_check(dec, 1e-6));
    }

    #[test]
    fn search_extremal_certificate() {
        let ch = Ch::from_matrix(&extremal_xi()).unwrap();
        match ru_decompose_search(&ch, &SearchConfig::default()) {
            Err(SearchFailure::NotRandomUnitary(cert)) => {
                assert_eq!(cert.kraus_rank, 2);
                assert_eq!(cert.gram_rank, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn search_planted_two_terms() {
        let pa = vec![0.0, 0.9, 2.1, 4.0];
        let pb = vec![0.0, 3.3, 0.4, 1.7];
        let xi = planted(&[0.7, 0.3], &[pa, pb]);
        let ch = Ch::from_matrix(&xi).unwrap();
        let out = ru_decompose_search(&ch, &SearchConfig::with_seed(5)).unwrap();
        assert!(out.residual <= 1e-8);
    }

    #[test]
    fn search_is_deterministic() {
        let ch = Ch::from_matrix(&gap_xi()).unwrap();
        let a = ru_decompose_search(&ch, &SearchConfig::with_seed(9)).unwrap();
        let b = ru_decompose_search(&ch, &SearchConfig::with_seed(9)).unwrap();
        assert_eq!(a.decomposition, b.decomposition);
    }

    #[test]
    fn search_full_rank_qutrit() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(77);
        for _ in 0..5 {
            let xi: M = random_correlation(3, 3, &mut rng);
            let ch = Ch::from_matrix(&xi).unwrap();
            let out = ru_decompose_search(&ch, &SearchConfig::with_seed(2)).unwrap();
            assert!(out.residual <= 1e-8);
        }
    }

    #[test]
    fn planted_recovery_rate() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(2024);
        let mut ok = 0;
        for trial in 0..20 {
            let d = 3 + trial % 2;
            let k = 1 + trial % 3;
            let w: Vec<f64> = random_probabilities(k, 0.2, &mut rng);
            let ph: Vec<Vec<f64>> = (0..k).map(|_| random_phases(d, &mut rng)).collect();
            let ch = Ch::from_matrix(&planted(&w, &ph)).unwrap();
            match ru_decompose_search(&ch, &SearchConfig::with_seed(trial as u64)) {
                Ok(s) => {
                    assert!(s.residual <= 1e-8);
                    ok += 1;
                }
                Err(SearchFailure::Inconclusive { .. }) => {}
                Err(e) => panic!("wrong certificate on planted channel: {e:?}"),
            }
        }
        assert!(ok >= 19, "{ok}/20");
    }
}
