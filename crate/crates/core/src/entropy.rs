//! Entropy exchange by three independent routes, information bounds and the
//! reference-system correlation accounting.

use crate::channel::{check_probabilities, DensityMatrix, SchurChannel};
use crate::decompose::{orthogonality_check, verify_decomposition, RandomUnitaryDecomposition};
use crate::dilation::{env_reduced_state, DilationModel, DECOMPOSITION_TOL};
use crate::error::{Error, Result};
use crate::numerics::{entropy_of_eigenvalues, hermitian_eig, von_neumann_entropy, ComplexMatrix};
use crate::scalar::{cz, shannon_bits, Real};

/// `S(√ρ_∞ ξ √ρ_∞)` in bits, with `ρ_∞` the diagonal part of `ρ`.
pub fn entropy_exchange<T: Real>(ch: &SchurChannel<T>, rho: &DensityMatrix<T>) -> Result<T> {
    rho.matrix().require_dim(ch.dim())?;
    let s: Vec<T> = rho.populations().iter().map(|p| p.max(T::zero()).sqrt()).collect();
    let xi = ch.xi();
    let m = ComplexMatrix::from_fn(ch.dim(), ch.dim(), |k, l| xi[(k, l)] * (s[k] * s[l]));
    von_neumann_entropy(&m)
}

/// Entropy of the environment after the interaction.
pub fn entropy_exchange_via_dilation<T: Real>(model: &DilationModel<T>, rho: &DensityMatrix<T>) -> Result<T> {
    von_neumann_entropy(env_reduced_state(model, rho)?.matrix())
}

/// `S(W)` with `W_ij = √(p_i p_j) Tr[U_i† ρ U_j]`, the Gram matrix of the
/// conditional outputs of the unitary mixture.
pub fn entropy_exchange_ru<T: Real>(dec: &RandomUnitaryDecomposition<T>, rho: &DensityMatrix<T>) -> Result<T> {
    rho.matrix().require_dim(dec.dim())?;
    let pops = rho.populations();
    let n = dec.len();
    let vs: Vec<_> = dec.phase_vectors().iter().map(|p| p.vector()).collect();
    let w = dec.weights();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let tr = (0..dec.dim())
            .map(|k| vs[i][k].conj() * vs[j][k] * pops[k])
            .fold(cz(), |a, b| a + b);
        tr * (w[i] * w[j]).sqrt()
    });
    von_neumann_entropy(&m.hermitian_part())
}

/// Information accounting for one channel and input.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoReport<T: Real> {
    /// Entropy exchange at the given input.
    pub s_ex: T,
    /// Entropy exchange at `𝟙/d`, i.e. `S(ξ/d)`.
    pub s_ex_uniform: T,
    pub input_entropy: T,
    pub output_entropy: T,
    /// `|S(𝓔(ρ)) − S(ρ)|`.
    pub entropy_production: T,
    /// `H(p)` of the supplied decomposition.
    pub h_p: Option<T>,
    /// `H(p) − S(ξ/d)`.
    pub bound_gap: Option<T>,
    /// Whether the decomposition's unitaries are pairwise trace-orthogonal.
    pub orthogonal: Option<bool>,
}

impl<T: Real> InfoReport<T> {
    /// Entropy-production bound with the given slack.
    pub fn production_bound_holds(&self, slack: T) -> bool {
        self.entropy_production <= self.s_ex + slack
    }

    /// `S(ξ/d) ≤ H(p)` with the given slack; vacuous without a decomposition.
    pub fn information_bound_holds(&self, slack: T) -> bool {
        self.bound_gap.is_none_or(|g| g >= -slack)
    }
}

/// Evaluates both sides of the entropy-production bound and, when a
/// decomposition is supplied, of `S(ξ/d) ≤ H(p)`.
pub fn check_bounds<T: Real>(
    ch: &SchurChannel<T>,
    rho: &DensityMatrix<T>,
    dec: Option<&RandomUnitaryDecomposition<T>>,
) -> Result<InfoReport<T>> {
    let d = ch.dim();
    rho.matrix().require_dim(d)?;
    let s_ex = entropy_exchange(ch, rho)?;
    let s_ex_uniform = entropy_exchange(ch, &DensityMatrix::maximally_mixed(d))?;
    let input_entropy = von_neumann_entropy(rho.matrix())?;
    let output_entropy = von_neumann_entropy(ch.apply_schrodinger(rho)?.matrix())?;
    let (h_p, bound_gap, orthogonal) = match dec {
        Some(dec) => {
            let residual = verify_decomposition(dec, ch)?.residual;
            if !(residual <= T::lit(DECOMPOSITION_TOL)) {
                return Err(Error::DecompositionMismatch {
                    residual: residual.as_f64(),
                });
            }
            let h = dec.entropy_bits();
            let tol = T::lit(1e-9).max(T::default_tol());
            (Some(h), Some(h - s_ex_uniform), Some(orthogonality_check(dec, tol)))
        }
        None => (None, None, None),
    };
    Ok(InfoReport {
        s_ex,
        s_ex_uniform,
        input_entropy,
        output_entropy,
        entropy_production: (output_entropy - input_entropy).abs(),
        h_p,
        bound_gap,
        orthogonal,
    })
}

/// Joint state of reference and system after the channel acts on the
/// system half of `Σ_i √p_i |i>|i>`.
#[derive(Debug, Clone)]
pub struct ReferenceFrame<T: Real> {
    /// `R = Σ_ij ξ_ji √(p_i p_j) |i><j| ⊗ |i><j|`, reference first.
    pub joint: ComplexMatrix<T>,
    pub reference_entropy: T,
    pub system_entropy: T,
    pub joint_entropy: T,
    /// `2 H(p)`.
    pub mutual_info_before: T,
    /// `S(ρ_r) + S(ρ_s) − S(R)`.
    pub mutual_info_after: T,
}

pub fn reference_frame_state<T: Real>(ch: &SchurChannel<T>, p: &[T]) -> Result<ReferenceFrame<T>> {
    let d = ch.dim();
    if p.len() != d {
        return Err(Error::InvalidProbabilityVector {
            reason: format!("length {} for dimension {d}", p.len()),
        });
    }
    check_probabilities(p)?;
    let xi = ch.xi();
    let s: Vec<T> = p.iter().map(|x| x.sqrt()).collect();
    let dd = d * d;
    let joint = ComplexMatrix::from_fn(dd, dd, |a, b| {
        let (i, k) = (a / d, a % d);
        let (j, l) = (b / d, b % d);
        if i == k && j == l {
            xi[(j, i)] * (s[i] * s[j])
        } else {
            cz()
        }
    });
    // zero-probability indices carry no weight
    let support: Vec<usize> = (0..d).filter(|&i| p[i] > T::zero()).collect();
    let rows: Vec<usize> = support
        .iter()
        .flat_map(|&i| support.iter().map(move |&k| i * d + k))
        .collect();
    let restricted = ComplexMatrix::from_fn(rows.len(), rows.len(), |a, b| joint[(rows[a], rows[b])]);
    let joint_entropy = entropy_of_eigenvalues(&hermitian_eig(&restricted)?.eigenvalues);
    let h = shannon_bits(p);
    Ok(ReferenceFrame {
        joint,
        reference_entropy: h,
        system_entropy: h,
        joint_entropy,
        mutual_info_before: h + h,
        mutual_info_after: h + h - joint_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{ru_decompose_qubit, ru_decompose_search, PhaseVector, SearchConfig};
    use crate::dilation::build_dilation;
    use crate::random::{random_correlation, random_density, random_phases, random_probabilities};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    type M = ComplexMatrix<f64>;
    type Ch = SchurChannel<f64>;
    type Dm = DensityMatrix<f64>;

    const H08: f64 = 0.7219280948873623;

    fn qubit(x: f64) -> Ch {
        Ch::from_matrix(&M::from_real(&[&[1.0, x], &[x, 1.0]]).unwrap()).unwrap()
    }

    fn gap_xi() -> Ch {
        let r = FRAC_1_SQRT_2;
        Ch::from_matrix(&M::from_real(&[&[1.0, 0.0, r], &[0.0, 1.0, r], &[r, r, 1.0]]).unwrap()).unwrap()
    }

    #[test]
    fn exchange_examples() {
        let ch = qubit(0.6);
        let mm = Dm::maximally_mixed(2);
        assert!((entropy_exchange(&ch, &mm).unwrap() - H08).abs() < 1e-12);
        assert!(entropy_exchange(&ch, &Dm::classical(&[1.0, 0.0]).unwrap()).unwrap() < 1e-12);
        assert!(entropy_exchange(&Ch::identity(3), &Dm::maximally_mixed(3)).unwrap() < 1e-12);
        let model = build_dilation(&ch);
        assert!((entropy_exchange_via_dilation(&model, &mm).unwrap() - H08).abs() < 1e-12);
        let dephase = Ch::complete_dephasing(4);
        let s = entropy_exchange_via_dilation(&build_dilation(&dephase), &Dm::maximally_mixed(4)).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        let dec = ru_decompose_qubit(&ch).unwrap();
        assert!((entropy_exchange_ru(&dec, &mm).unwrap() - H08).abs() < 1e-12);
        assert!(matches!(
            entropy_exchange(&ch, &Dm::maximally_mixed(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_unitary_has_no_exchange() {
        let dec = RandomUnitaryDecomposition::new(vec![1.0], vec![PhaseVector::new(vec![0.0, 1.0, 2.0])]).unwrap();
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(1);
        let rho = Dm::new(random_density(3, 3, &mut rng)).unwrap();
        assert!(entropy_exchange_ru(&dec, &rho).unwrap() < 1e-12);
    }

    #[test]
    fn routes_agree() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(12);
        for trial in 0..60 {
            let d = 2 + trial % 4;
            let ch = Ch::from_matrix(&random_correlation(d, 1 + trial % d, &mut rng)).unwrap();
            let rho = Dm::new(random_density(d, 1 + trial % 3, &mut rng)).unwrap();
            let a = entropy_exchange(&ch, &rho).unwrap();
            let b = entropy_exchange_via_dilation(&build_dilation(&ch), &rho).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} {b}");
            let rank = ch.correlation().rank() as f64;
            assert!(a >= 0.0 && a <= rank.log2() + 1e-9);
        }
    }

    #[test]
    fn ru_route_agrees_on_planted() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(4);
        for trial in 0..30 {
            let d = 2 + trial % 4;
            let k = 1 + trial % 4;
            let w: Vec<f64> = random_probabilities(k, 0.1, &mut rng);
            let pvs: Vec<PhaseVector<f64>> = (0..k).map(|_| PhaseVector::new(random_phases(d, &mut rng))).collect();
            let dec = RandomUnitaryDecomposition::new(w, pvs).unwrap();
            let ch = Ch::from_matrix(&dec.reconstruct()).unwrap();
            let rho = Dm::new(random_density(d, d, &mut rng)).unwrap();
            let a = entropy_exchange(&ch, &rho).unwrap();
            let c = entropy_exchange_ru(&dec, &rho).unwrap();
            assert!((a - c).abs() < 1e-9, "{a} {c}");
            assert!(c <= dec.entropy_bits() + 1e-9);
        }
    }

    #[test]
    fn bounds_examples() {
        let ch = qubit(0.6);
        let dec = ru_decompose_qubit(&ch).unwrap();
        let rep = check_bounds(&ch, &Dm::maximally_mixed(2), Some(&dec)).unwrap();
        assert!(rep.bound_gap.unwrap().abs() < 1e-9);
        assert_eq!(rep.orthogonal, Some(true));
        assert!(rep.production_bound_holds(1e-9));

        let ch = gap_xi();
        let dec = ru_decompose_search(&ch, &SearchConfig::with_seed(1)).unwrap().decomposition;
        let rep = check_bounds(&ch, &Dm::maximally_mixed(3), Some(&dec)).unwrap();
        assert!(rep.bound_gap.unwrap() > 0.01);
        assert_eq!(rep.orthogonal, Some(false));
        let ru = entropy_exchange_ru(&dec, &Dm::maximally_mixed(3)).unwrap();
        assert!((ru - rep.s_ex_uniform).abs() < 1e-9);

        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(5);
        let rho = Dm::new(random_density(3, 2, &mut rng)).unwrap();
        let rep = check_bounds(&Ch::identity(3), &rho, None).unwrap();
        assert!(rep.s_ex < 1e-12 && rep.entropy_production < 1e-9);
        assert!(rep.h_p.is_none() && rep.information_bound_holds(0.0));

        let wrong = ru_decompose_qubit(&qubit(0.1)).unwrap();
        assert!(matches!(
            check_bounds(&qubit(0.6), &Dm::maximally_mixed(2), Some(&wrong)),
            Err(Error::DecompositionMismatch { .. })
        ));
    }

    #[test]
    fn fourier_mixture_meets_bound() {
        let d = 3;
        let w = vec![0.5, 0.3, 0.2];
        let pvs: Vec<PhaseVector<f64>> = (0..d)
            .map(|j| PhaseVector::new((0..d).map(|k| std::f64::consts::TAU * (j * k) as f64 / d as f64).collect()))
            .collect();
        let dec = RandomUnitaryDecomposition::new(w, pvs).unwrap();
        let ch = Ch::from_matrix(&dec.reconstruct()).unwrap();
        let rep = check_bounds(&ch, &Dm::maximally_mixed(d), Some(&dec)).unwrap();
        assert!(rep.bound_gap.unwrap().abs() < 1e-9);
        assert_eq!(rep.orthogonal, Some(true));
    }

    #[test]
    fn exchange_decreases_with_coherence() {
        let mm = Dm::maximally_mixed(2);
        let values: Vec<f64> = (0..10)
            .map(|i| entropy_exchange(&qubit(i as f64 / 10.0), &mm).unwrap())
            .collect();
        assert!((values[0] - 1.0).abs() < 1e-12);
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn reference_frame_examples() {
        let rf = reference_frame_state(&qubit(0.6), &[0.5, 0.5]).unwrap();
        assert!((rf.mutual_info_after - 1.278072).abs() < 1e-6);
        assert!((rf.mutual_info_after - (2.0 - H08)).abs() < 1e-9);
        let pr = rf.joint.partial_trace_first(2, 2).unwrap();
        let ps = rf.joint.partial_trace_second(2, 2).unwrap();
        let target = M::from_real(&[&[0.5, 0.0], &[0.0, 0.5]]).unwrap();
        assert!(pr.sub(&target).unwrap().max_abs() < 1e-10);
        assert!(ps.sub(&target).unwrap().max_abs() < 1e-10);

        let rf = reference_frame_state(&Ch::identity(3), &[0.2, 0.3, 0.5]).unwrap();
        assert!((rf.mutual_info_after - rf.mutual_info_before).abs() < 1e-9);

        let rf = reference_frame_state(&qubit(0.3), &[1.0, 0.0]).unwrap();
        assert!(rf.mutual_info_before.abs() < 1e-12 && rf.mutual_info_after.abs() < 1e-12);

        assert!(matches!(
            reference_frame_state(&qubit(0.3), &[0.5, 0.6]),
            Err(Error::InvalidProbabilityVector { .. })
        ));
        assert!(reference_frame_state(&qubit(0.3), &[1.0]).is_err());
    }

    #[test]
    fn reference_frame_matches_exchange() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(31);
        for d in 2..6 {
            let ch = Ch::from_matrix(&random_correlation(d, d, &mut rng)).unwrap();
            let p: Vec<f64> = random_probabilities(d, 0.0, &mut rng);
            let rf = reference_frame_state(&ch, &p).unwrap();
            let s = entropy_exchange(&ch, &Dm::classical(&p).unwrap()).unwrap();
            assert!((rf.mutual_info_after - (2.0 * shannon_bits(&p) - s)).abs() < 1e-9);
            assert!(rf.mutual_info_after <= rf.mutual_info_before + 1e-9);
        }
    }
}
