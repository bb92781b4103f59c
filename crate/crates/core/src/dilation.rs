//! System–environment model, environment measurement with classical
//! feedback, and recovery-measurement optimization.
//!
//! The channel is realized by the isometry `|k>|0> ↦ |k>|e_k>` with
//! `<e_k|e_l> = ξ_kl`. A rank-one measurement `{|μ_m>}` on the environment
//! leaves the system with the diagonal operator `A_m = Σ_k <μ_m|e_k> |k><k|`;
//! the best diagonal unitary correction for outcome `m` multiplies entry `k`
//! by the phase of `conj(<μ_m|e_k>)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{DensityMatrix, SchurChannel};
use crate::decompose::{
    ru_decompose_search, verify_decomposition, PhaseVector, RandomUnitaryDecomposition, SearchConfig,
};
use crate::error::{Error, Result};
use crate::numerics::{factor_spectrum, gram_matrix, hermitian_eig, state_fidelity, ComplexMatrix};
use crate::random::{gaussian_vector, sub_seed};
use crate::scalar::{cis, cre, cz, shannon_bits, Real, C};

/// Tolerance on a decomposition before it is used for feedback.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// Isometric dilation `|k>|0> ↦ |k>|e_k>` with a pure initial environment.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationModel<T: Real> {
    sys_dim: usize,
    env_dim: usize,
    env_vectors: Vec<Vec<C<T>>>,
}

/// Dilation with environment dimension `rank(ξ)`.
pub fn build_dilation<T: Real>(ch: &SchurChannel<T>) -> DilationModel<T> {
    let spec = ch.correlation().spectrum();
    let env_vectors = factor_spectrum(&spec, T::default_tol());
    DilationModel {
        sys_dim: ch.dim(),
        env_dim: env_vectors[0].len(),
        env_vectors,
    }
}

impl<T: Real> DilationModel<T> {
    /// Environment vectors `e_k[i] = √p_i conj(φ_i[k])`, so that reading the
    /// environment in its computational basis reveals the index `i`.
    pub fn from_decomposition(dec: &RandomUnitaryDecomposition<T>) -> Self {
        let d = dec.dim();
        let env_vectors = (0..d)
            .map(|k| {
                dec.weights()
                    .iter()
                    .zip(dec.phase_vectors())
                    .map(|(&p, pv)| cis(-pv.phases()[k]) * p.sqrt())
                    .collect()
            })
            .collect();
        Self {
            sys_dim: d,
            env_dim: dec.len(),
            env_vectors,
        }
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn env_vectors(&self) -> &[Vec<C<T>>] {
        &self.env_vectors
    }

    /// `d·r × d` matrix of the isometry, system index major.
    pub fn isometry(&self) -> ComplexMatrix<T> {
        let (d, r) = (self.sys_dim, self.env_dim);
        ComplexMatrix::from_fn(d * r, d, |row, k| {
            if row / r == k {
                self.env_vectors[k][row % r]
            } else {
                cz()
            }
        })
    }

    /// `‖[<e_k|e_l>] − ξ‖_max`.
    pub fn gram_defect(&self, xi: &ComplexMatrix<T>) -> Result<T> {
        Ok(gram_matrix(&self.env_vectors).sub(xi)?.max_abs())
    }

    /// `‖V†V − 𝟙‖_max`.
    pub fn isometry_defect(&self) -> T {
        let v = self.isometry();
        let vv = v.adjoint().matmul(&v).expect("shapes agree");
        vv.sub(&ComplexMatrix::identity(self.sys_dim))
            .expect("shapes agree")
            .max_abs()
    }

    /// `V ρ V†` on system ⊗ environment.
    pub fn joint_output(&self, rho: &DensityMatrix<T>) -> Result<ComplexMatrix<T>> {
        rho.matrix().require_dim(self.sys_dim)?;
        let v = self.isometry();
        v.matmul(rho.matrix())?.matmul(&v.adjoint())
    }

    /// `Tr_env[V ρ V†]`.
    pub fn system_output(&self, rho: &DensityMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.joint_output(rho)?
            .partial_trace_second(self.sys_dim, self.env_dim)
    }

    /// Diagonal entries `a_mk = <μ_m|e_k>` of the conditional operators.
    fn amplitudes(&self, m: &EnvMeasurement<T>) -> Vec<Vec<C<T>>> {
        m.outcome_vectors
            .iter()
            .map(|mu| {
                self.env_vectors
                    .iter()
                    .map(|e| crate::numerics::inner(mu, e))
                    .collect()
            })
            .collect()
    }
}

/// `σ_e = Σ_k ρ_kk |e_k><e_k|`.
pub fn env_reduced_state<T: Real>(model: &DilationModel<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    rho.matrix().require_dim(model.sys_dim)?;
    let r = model.env_dim;
    let mut acc = ComplexMatrix::zeros(r, r);
    for (p, e) in rho.populations().iter().zip(&model.env_vectors) {
        acc = acc.add(&ComplexMatrix::outer(e, e).scale_real(*p))?;
    }
    Ok(DensityMatrix::from_raw(acc.hermitian_part()))
}

/// Rank-one resolution of the identity on the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvMeasurement<T: Real> {
    pub outcome_vectors: Vec<Vec<C<T>>>,
}

impl<T: Real> EnvMeasurement<T> {
    /// Checks `Σ_m |μ_m><μ_m| = 𝟙` within `1e-10` and at least `env_dim`
    /// outcomes.
    pub fn new(outcome_vectors: Vec<Vec<C<T>>>, env_dim: usize) -> Result<Self> {
        if outcome_vectors.len() < env_dim {
            return Err(Error::InvalidArgument(format!(
                "{} outcomes for an environment of dimension {env_dim}",
                outcome_vectors.len()
            )));
        }
        if let Some(bad) = outcome_vectors.iter().find(|v| v.len() != env_dim) {
            return Err(Error::DimensionMismatch {
                expected: env_dim,
                found: bad.len(),
            });
        }
        let m = Self { outcome_vectors };
        let defect = m.resolution_defect();
        if defect > T::default_tol().max(T::lit(1e-10)) {
            return Err(Error::ProjectorsIncomplete {
                defect: defect.as_f64(),
            });
        }
        Ok(m)
    }

    /// Measurement in the computational basis of `C^r`.
    pub fn computational(r: usize) -> Self {
        Self {
            outcome_vectors: (0..r)
                .map(|i| (0..r).map(|j| if i == j { cre(T::one()) } else { cz() }).collect())
                .collect(),
        }
    }

    /// Rows of an `M × r` isometry `W` as `<μ_m|`.
    fn from_isometry(w: &ComplexMatrix<T>) -> Self {
        Self {
            outcome_vectors: (0..w.rows())
                .map(|m| w.row(m).iter().map(|z| z.conj()).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.outcome_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome_vectors.is_empty()
    }

    pub fn env_dim(&self) -> usize {
        self.outcome_vectors.first().map_or(0, Vec::len)
    }

    /// `‖Σ_m |μ_m><μ_m| − 𝟙‖_max`.
    pub fn resolution_defect(&self) -> T {
        let r = self.env_dim();
        let mut acc = ComplexMatrix::zeros(r, r);
        for mu in &self.outcome_vectors {
            acc = acc.add(&ComplexMatrix::outer(mu, mu)).expect("same shape");
        }
        acc.sub(&ComplexMatrix::identity(r)).expect("same shape").max_abs()
    }
}

/// Outcome of a recovery simulation or optimization.
#[derive(Debug, Clone)]
pub struct RecoveryReport<T: Real> {
    pub measurement: EnvMeasurement<T>,
    /// Diagonal unitary applied after each outcome.
    pub corrections: Vec<PhaseVector<T>>,
    pub outcome_probabilities: Vec<T>,
    /// Simulation: minimum recovered-state fidelity over outcomes.
    /// Optimization: minimum conditional entanglement fidelity over outcomes.
    pub worst_case_fidelity: T,
    pub average_entanglement_fidelity: T,
    pub classical_info_bits: T,
    pub per_outcome_fidelity: Vec<T>,
    /// Largest deviation of a conditional state from `U_i† ρ U_i`.
    pub conditional_state_error: Option<T>,
    pub shots: usize,
    pub empirical_frequencies: Vec<T>,
    pub outcome_counts: Vec<usize>,
}

/// `F = (1/d²) Σ_m |Σ_k c_mk a_mk|²` for corrections `c_m`.
fn entanglement_fidelity<T: Real>(a: &[Vec<C<T>>], corrections: &[Vec<C<T>>]) -> T {
    let d = T::from_usize_lossy(a.first().map_or(1, Vec::len));
    let s: T = a
        .iter()
        .zip(corrections)
        .map(|(row, c)| {
            row.iter()
                .zip(c)
                .map(|(x, y)| *x * *y)
                .sum::<C<T>>()
                .norm_sqr()
        })
        .sum();
    s / (d * d)
}

/// `F` with the optimal correction: `(1/d²) Σ_m (Σ_k |a_mk|)²`.
fn optimal_fidelity<T: Real>(a: &[Vec<C<T>>]) -> T {
    let d = T::from_usize_lossy(a.first().map_or(1, Vec::len));
    let s: T = a
        .iter()
        .map(|row| {
            let l1: T = row.iter().map(|z| z.norm()).sum();
            l1 * l1
        })
        .sum();
    s / (d * d)
}

fn phase_of_conj<T: Real>(z: C<T>) -> C<T> {
    let n = z.norm();
    if n > T::zero() {
        z.conj() / n
    } else {
        cre(T::one())
    }
}

fn check_decomposition<T: Real>(ch: &SchurChannel<T>, dec: &RandomUnitaryDecomposition<T>) -> Result<()> {
    let residual = verify_decomposition(dec, ch)?.residual;
    if !(residual <= T::lit(DECOMPOSITION_TOL)) {
        return Err(Error::DecompositionMismatch {
            residual: residual.as_f64(),
        });
    }
    Ok(())
}

/// Inverse-CDF sampling of `shots` outcomes.
fn sample_counts<T: Real>(p: &[T], shots: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdf: Vec<f64> = p
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x.as_f64();
            Some(*acc)
        })
        .collect();
    let total = cdf.last().copied().unwrap_or(1.0);
    let mut counts = vec![0usize; p.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let i = cdf.partition_point(|&c| c <= u).min(p.len() - 1);
        counts[i] += 1;
    }
    counts
}

fn frequencies<T: Real>(counts: &[usize], shots: usize) -> Vec<T> {
    counts
        .iter()
        .map(|&c| T::from_usize_lossy(c) / T::from_usize_lossy(shots.max(1)))
        .collect()
}

/// Measures the environment of the decomposition-based dilation in its
/// computational basis and applies `U_i` after outcome `i`.
pub fn simulate_feedback_recovery<T: Real>(
    ch: &SchurChannel<T>,
    dec: &RandomUnitaryDecomposition<T>,
    rho: &DensityMatrix<T>,
    shots: usize,
    seed: u64,
) -> Result<RecoveryReport<T>> {
    rho.matrix().require_dim(ch.dim())?;
    check_decomposition(ch, dec)?;
    let d = ch.dim();
    let model = DilationModel::from_decomposition(dec);
    let n = model.env_dim;
    let joint = model.joint_output(rho)?;
    let measurement = EnvMeasurement::computational(n);

    let mut probs = Vec::with_capacity(n);
    let mut per_outcome = Vec::with_capacity(n);
    let mut cond_error = T::zero();
    for (i, pv) in dec.phase_vectors().iter().enumerate() {
        let cond = ComplexMatrix::from_fn(d, d, |k, l| joint[(k * n + i, l * n + i)]);
        let p = cond.trace().re;
        probs.push(p);
        let cond = cond.scale_real(T::one() / p).hermitian_part();
        let u = pv.unitary();
        let expected = u.adjoint().matmul(rho.matrix())?.matmul(&u)?;
        cond_error = cond_error.max(cond.sub(&expected)?.max_abs());
        let recovered = u.matmul(&cond)?.matmul(&u.adjoint())?;
        per_outcome.push(state_fidelity(&recovered, rho.matrix())?);
    }
    let a = model.amplitudes(&measurement);
    let corrections: Vec<Vec<C<T>>> = dec.phase_vectors().iter().map(PhaseVector::vector).collect();
    let counts = sample_counts(&probs, shots, seed);
    Ok(RecoveryReport {
        measurement,
        corrections: dec.phase_vectors().to_vec(),
        worst_case_fidelity: per_outcome.iter().copied().fold(T::one(), T::min),
        average_entanglement_fidelity: entanglement_fidelity(&a, &corrections),
        classical_info_bits: shannon_bits(dec.weights()),
        outcome_probabilities: probs,
        per_outcome_fidelity: per_outcome,
        conditional_state_error: Some(cond_error),
        shots,
        empirical_frequencies: frequencies(&counts, shots),
        outcome_counts: counts,
    })
}

/// `Z (Z†Z)^{-1/2}`, or `None` when `Z` is rank deficient.
fn polar_isometry<T: Real>(z: &ComplexMatrix<T>) -> Option<ComplexMatrix<T>> {
    let zz = z.adjoint().matmul(z).ok()?.hermitian_part();
    let spec = hermitian_eig(&zz).ok()?;
    let cut = T::epsilon().sqrt() * spec.max();
    if !(spec.min() > cut) {
        return None;
    }
    z.matmul(&spec.apply_fn(|l| T::one() / l.sqrt())).ok()
}

/// Minorize–maximize ascent of `F(W) = (1/d²) Σ_m (Σ_k |(W E)_mk|)²` over
/// `M × r` isometries. Each step fixes the optimal phases and solves the
/// resulting linear problem by a polar decomposition, so `F` never decreases.
fn ascend<T: Real>(mut w: ComplexMatrix<T>, e: &ComplexMatrix<T>, iters: usize) -> (ComplexMatrix<T>, T) {
    let mut f = optimal_fidelity(&rows(&w.matmul(e).expect("shapes agree")));
    let (m, r) = (w.rows(), w.cols());
    for _ in 0..iters {
        let a = w.matmul(e).expect("shapes agree");
        // B_jm = s_m Σ_k E_jk c_mk, with s_m = Σ_k |a_mk|
        let b = ComplexMatrix::from_fn(r, m, |j, mm| {
            let s: T = a.row(mm).iter().map(|z| z.norm()).sum();
            let t: C<T> = (0..e.cols()).map(|k| e[(j, k)] * phase_of_conj(a[(mm, k)])).sum();
            t * s
        });
        let Some(next) = polar_isometry(&b.adjoint()) else {
            break;
        };
        let fn_ = optimal_fidelity(&rows(&next.matmul(e).expect("shapes agree")));
        if !(fn_ > f) {
            break;
        }
        let gain = fn_ - f;
        w = next;
        f = fn_;
        if gain <= T::epsilon() * T::lit(4.0) {
            break;
        }
    }
    (w, f)
}

fn rows<T: Real>(m: &ComplexMatrix<T>) -> Vec<Vec<C<T>>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Options of [`optimize_recovery_measurement`] beyond the spec parameters.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Run the decomposition search to seed an aligned warm start.
    pub ru_warm_start: bool,
    pub search_starts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            ru_warm_start: true,
            search_starts: 64,
        }
    }
}

/// Default outcome count for an environment of dimension `r`.
pub fn default_outcomes(r: usize) -> usize {
    (r * r).max(r)
}

/// Searches rank-one environment measurements with `outcomes` elements
/// maximizing the average entanglement fidelity of the corrected channel.
///
/// Warm starts: the computational basis of the environment and, when the
/// channel has a random-unitary decomposition with at most `outcomes` terms
/// (or more, in which case the outcome count is raised), the measurement
/// that reads out its index. Restart `j` is seeded by `(seed, j)` only, so
/// the best value is nondecreasing in `restarts`.
pub fn optimize_recovery_measurement<T: Real>(
    ch: &SchurChannel<T>,
    outcomes: usize,
    restarts: usize,
    seed: u64,
) -> Result<RecoveryReport<T>> {
    optimize_recovery_measurement_with(ch, outcomes, restarts, seed, &OptimizerConfig::default())
}

pub fn optimize_recovery_measurement_with<T: Real>(
    ch: &SchurChannel<T>,
    outcomes: usize,
    restarts: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<RecoveryReport<T>> {
    let model = build_dilation(ch);
    let (d, r) = (model.sys_dim, model.env_dim);
    if outcomes < r {
        return Err(Error::InvalidArgument(format!(
            "{outcomes} outcomes for an environment of dimension {r}"
        )));
    }
    let e = ComplexMatrix::from_fn(r, d, |j, k| model.env_vectors[k][j]);

    let aligned = if config.ru_warm_start && r > 1 {
        let search = SearchConfig {
            starts: config.search_starts,
            seed,
            ..SearchConfig::default()
        };
        ru_decompose_search(ch, &search)
            .ok()
            .and_then(|s| aligned_isometry(&e, &s.decomposition))
    } else {
        None
    };
    let m = aligned.as_ref().map_or(outcomes, |v| v.rows().max(outcomes));
    let pad = |v: &ComplexMatrix<T>| {
        ComplexMatrix::from_fn(m, r, |i, j| if i < v.rows() { v[(i, j)] } else { cz() })
    };

    let mut warm = vec![pad(&ComplexMatrix::identity(r))];
    if let Some(v) = &aligned {
        warm.push(pad(v));
    }
    let warm_results: Vec<(ComplexMatrix<T>, T)> = warm
        .into_iter()
        .map(|w| ascend(w, &e, config.max_iters))
        .collect();
    let random_results: Vec<Option<(ComplexMatrix<T>, T)>> = (0..restarts)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 0x5EC0, j as u64));
            let g: Vec<C<T>> = gaussian_vector(m * r, &mut rng);
            let z = ComplexMatrix::new(m, r, g).ok()?;
            polar_isometry(&z).map(|w| ascend(w, &e, config.max_iters))
        })
        .collect();

    let mut best: Option<(ComplexMatrix<T>, T)> = None;
    for cand in warm_results.into_iter().chain(random_results.into_iter().flatten()) {
        if best.as_ref().is_none_or(|b| cand.1 > b.1) {
            best = Some(cand);
        }
    }
    let (w, _) = best.expect("identity warm start always exists");
    Ok(report_for_isometry(&model, &w))
}

/// `V = F E⁺` maps the rank-`r` environment vectors onto the
/// decomposition-based ones; returns its polar part.
fn aligned_isometry<T: Real>(e: &ComplexMatrix<T>, dec: &RandomUnitaryDecomposition<T>) -> Option<ComplexMatrix<T>> {
    let ru = DilationModel::from_decomposition(dec);
    let n = ru.env_dim;
    let d = e.cols();
    let f = ComplexMatrix::from_fn(n, d, |i, k| ru.env_vectors[k][i]);
    let eet = e.matmul(&e.adjoint()).ok()?.hermitian_part();
    let spec = hermitian_eig(&eet).ok()?;
    if !(spec.min() > T::epsilon().sqrt() * spec.max()) {
        return None;
    }
    let pinv = e.adjoint().matmul(&spec.apply_fn(|l| T::one() / l)).ok()?;
    polar_isometry(&f.matmul(&pinv).ok()?)
}

fn report_for_isometry<T: Real>(model: &DilationModel<T>, w: &ComplexMatrix<T>) -> RecoveryReport<T> {
    let measurement = EnvMeasurement::from_isometry(w);
    let a = model.amplitudes(&measurement);
    let d = T::from_usize_lossy(model.sys_dim);
    let mut probs = Vec::with_capacity(a.len());
    let mut per_outcome = Vec::with_capacity(a.len());
    let mut corrections = Vec::with_capacity(a.len());
    for row in &a {
        let l2: T = row.iter().map(|z| z.norm_sqr()).sum();
        let l1: T = row.iter().map(|z| z.norm()).sum();
        probs.push(l2 / d);
        per_outcome.push(if l2 > T::zero() { l1 * l1 / (d * l2) } else { T::one() });
        let c: Vec<C<T>> = row.iter().map(|z| phase_of_conj(*z)).collect();
        corrections.push(PhaseVector::from_vector(&c));
    }
    let floor = T::epsilon() * T::lit(16.0);
    let worst = probs
        .iter()
        .zip(&per_outcome)
        .filter(|(p, _)| **p > floor)
        .map(|(_, f)| *f)
        .fold(T::one(), T::min);
    RecoveryReport {
        measurement,
        corrections,
        worst_case_fidelity: worst,
        average_entanglement_fidelity: optimal_fidelity(&a),
        classical_info_bits: shannon_bits(&probs),
        outcome_probabilities: probs,
        per_outcome_fidelity: per_outcome,
        conditional_state_error: None,
        shots: 0,
        empirical_frequencies: Vec::new(),
        outcome_counts: Vec::new(),
    }
}

/// Correction `Π_i U_i^{c_i}` for outcome counts `c_i`, as phases
/// `θ_k = Σ_i c_i φ_i[k]`.
pub fn correction_for_counts<T: Real>(dec: &RandomUnitaryDecomposition<T>, counts: &[usize]) -> Result<PhaseVector<T>> {
    if counts.len() != dec.len() {
        return Err(Error::DimensionMismatch {
            expected: dec.len(),
            found: counts.len(),
        });
    }
    let theta = (0..dec.dim())
        .map(|k| {
            counts
                .iter()
                .zip(dec.phase_vectors())
                .map(|(&c, pv)| T::from_usize_lossy(c) * pv.phases()[k])
                .sum()
        })
        .collect();
    Ok(PhaseVector::new(theta))
}

/// Correction for a sequence of outcome indices; only their counts matter.
pub fn correction_for_outcomes<T: Real>(
    dec: &RandomUnitaryDecomposition<T>,
    outcomes: &[usize],
) -> Result<PhaseVector<T>> {
    let mut counts = vec![0usize; dec.len()];
    for &i in outcomes {
        *counts.get_mut(i).ok_or_else(|| {
            Error::InvalidArgument(format!("outcome {i} out of range for {} terms", dec.len()))
        })? += 1;
    }
    correction_for_counts(dec, &counts)
}

/// Entropy in bits of the outcome-count histogram after `n` independent
/// draws from `p`. Exact by enumeration when there are at most `1e6`
/// histograms, otherwise the upper bound `n H(p)`.
pub fn count_entropy_bits<T: Real>(p: &[T], n: usize) -> T {
    let k = p.len();
    let histograms = binomial_f64(n + k - 1, k - 1);
    if histograms > 1e6 {
        return T::from_usize_lossy(n) * shannon_bits(p);
    }
    let ln_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, i| {
            if i > 0 {
                *acc += (i as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let lp: Vec<f64> = p.iter().map(|x| x.as_f64().ln()).collect();
    let mut h = 0.0;
    let mut counts = vec![0usize; k];
    enumerate(&mut counts, 0, n, &mut |c| {
        let mut ln = ln_fact[n];
        for (ci, li) in c.iter().zip(&lp) {
            ln -= ln_fact[*ci];
            if *ci > 0 {
                ln += *ci as f64 * li;
            }
        }
        let q = ln.exp();
        if q > 0.0 {
            h -= q * q.log2();
        }
    });
    T::lit(h.max(0.0))
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn enumerate(counts: &mut [usize], pos: usize, left: usize, f: &mut impl FnMut(&[usize])) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        f(counts);
        return;
    }
    for c in 0..=left {
        counts[pos] = c;
        enumerate(counts, pos + 1, left - c, f);
    }
}

/// `n` applications of the channel, each with a fresh environment measured
/// right away. Only the outcome counts are kept; the final correction is
/// `Π_i U_i^{c_i}`.
pub fn iterated_recovery<T: Real>(
    ch: &SchurChannel<T>,
    dec: &RandomUnitaryDecomposition<T>,
    n: usize,
    rho: &DensityMatrix<T>,
    seed: u64,
) -> Result<RecoveryReport<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    rho.matrix().require_dim(ch.dim())?;
    check_decomposition(ch, dec)?;
    let d = ch.dim();
    let model = DilationModel::from_decomposition(dec);
    let r = model.env_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = rho.matrix().clone();
    let mut counts = vec![0usize; r];
    for _ in 0..n {
        let joint = model.joint_output(&DensityMatrix::from_raw(state.clone()))?;
        let conds: Vec<ComplexMatrix<T>> = (0..r)
            .map(|i| ComplexMatrix::from_fn(d, d, |k, l| joint[(k * r + i, l * r + i)]))
            .collect();
        let probs: Vec<f64> = conds.iter().map(|c| c.trace().re.as_f64()).collect();
        let total: f64 = probs.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = r - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        counts[pick] += 1;
        let c = &conds[pick];
        state = c.scale_real(T::one() / c.trace().re).hermitian_part();
    }
    let correction = correction_for_counts(dec, &counts)?;
    let u = correction.unitary();
    let recovered = u.matmul(&state)?.matmul(&u.adjoint())?.hermitian_part();
    let fidelity = state_fidelity(&recovered, rho.matrix())?;
    Ok(RecoveryReport {
        measurement: EnvMeasurement::computational(r),
        corrections: vec![correction],
        outcome_probabilities: dec.weights().to_vec(),
        worst_case_fidelity: fidelity,
        average_entanglement_fidelity: fidelity_if_pure_feedback(dec),
        classical_info_bits: count_entropy_bits(dec.weights(), n),
        per_outcome_fidelity: vec![fidelity],
        conditional_state_error: None,
        shots: n,
        empirical_frequencies: frequencies(&counts, n),
        outcome_counts: counts,
    })
}

/// Entanglement fidelity of one round of index readout plus `U_i` feedback.
fn fidelity_if_pure_feedback<T: Real>(dec: &RandomUnitaryDecomposition<T>) -> T {
    let model = DilationModel::from_decomposition(dec);
    let a = model.amplitudes(&EnvMeasurement::computational(model.env_dim));
    let c: Vec<Vec<C<T>>> = dec.phase_vectors().iter().map(PhaseVector::vector).collect();
    entanglement_fidelity(&a, &c)
}
