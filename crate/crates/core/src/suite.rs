//! Regression suite over the reference matrices and seeded random
//! instances. Each criterion reports pass/fail plus the metrics it checked.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{validate_correlation, ChannelClass, DensityMatrix, SchurChannel};
use crate::decompose::{
    extremality_test, orthogonality_check, ru_decompose_qubit, ru_decompose_search, PhaseVector,
    RandomUnitaryDecomposition, SearchConfig, SearchFailure, Verdict,
};
use crate::dilation::{
    build_dilation, correction_for_outcomes, iterated_recovery, optimize_recovery_measurement, simulate_feedback_recovery,
};
use crate::entropy::{check_bounds, entropy_exchange, entropy_exchange_ru, entropy_exchange_via_dilation};
use crate::fixtures;
use crate::numerics::von_neumann_entropy;
use crate::random::{
    random_correlation, random_density, random_hermitian, random_phases, random_probabilities, random_pure_density,
    sub_seed,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Added to both off-diagonal `(1,2)` entries of the extremal reference
    /// matrix before validation.
    pub perturbation: Option<f64>,
    pub restarts: usize,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            perturbation: None,
            restarts: 256,
            tol: 1e-10,
        }
    }
}

/// Names of the criteria in run order; id `0` is input validation.
pub const CRITERIA: [&str; 9] = [
    "reference matrices validate",
    "Kraus action equals Schur action",
    "qubit feedback recovery is perfect",
    "qutrit recovery with strict information gap",
    "extremal d=4 channel is not recoverable",
    "entropy exchange routes agree",
    "entropy bounds and equality condition",
    "decay law and commutation",
    "extremal rank bound",
];

struct Check {
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Records the running maximum of a metric.
    fn max(&mut self, key: &str, value: f64) {
        let e = self.metrics.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        if value > *e || value.is_nan() {
            *e = value;
        }
    }

    fn min(&mut self, key: &str, value: f64) {
        let e = self.metrics.entry(key.to_string()).or_insert(f64::INFINITY);
        if value < *e || value.is_nan() {
            *e = value;
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 5 {
            self.failures.push(what());
        }
    }

    fn finish(self, id: u8) -> CriterionResult {
        let status = if self.failures.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
        CriterionResult {
            id,
            name: CRITERIA[id as usize],
            status,
            metrics: self.metrics,
            note: self.failures.join("; "),
        }
    }
}

fn rng_for(seed: u64, id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, id as u64, 0))
}

type Ch = SchurChannel<f64>;
type Dm = DensityMatrix<f64>;

/// Runs every criterion in order. When validation fails the rest are skipped.
pub fn run_suite(config: &SuiteConfig) -> Vec<CriterionResult> {
    let validation = validate_references(config);
    let ok = validation.status == Status::Pass;
    let mut out = vec![validation];
    type Runner = fn(&SuiteConfig) -> CriterionResult;
    let runners: [Runner; 8] = [
        kraus_equals_schur,
        qubit_recovery,
        qutrit_recovery,
        extremal_impossibility,
        entropy_routes,
        entropy_bounds,
        decay_and_commutation,
        rank_bound,
    ];
    for (i, run) in runners.iter().enumerate() {
        if ok {
            out.push(run(config));
        } else {
            let id = (i + 1) as u8;
            out.push(CriterionResult {
                id,
                name: CRITERIA[id as usize],
                status: Status::Skipped,
                metrics: BTreeMap::new(),
                note: "reference validation failed".into(),
            });
        }
    }
    out
}

/// Runs one criterion by id (`0..=8`).
pub fn run_criterion(id: u8, config: &SuiteConfig) -> Option<CriterionResult> {
    Some(match id {
        0 => validate_references(config),
        1 => kraus_equals_schur(config),
        2 => qubit_recovery(config),
        3 => qutrit_recovery(config),
        4 => extremal_impossibility(config),
        5 => entropy_routes(config),
        6 => entropy_bounds(config),
        7 => decay_and_commutation(config),
        8 => rank_bound(config),
        _ => return None,
    })
}

fn validate_references(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut extremal = fixtures::extremal_qudit();
    if let Some(delta) = config.perturbation {
        extremal[(0, 1)] += delta;
        extremal[(1, 0)] += delta;
    }
    for (name, m) in [
        ("extremal_qudit", extremal),
        ("qutrit_gap", fixtures::qutrit_gap()),
        ("qubit", fixtures::qubit(0.6)),
    ] {
        match validate_correlation(&m, config.tol) {
            Ok(xi) => {
                c.metric(&format!("{name}.rank"), xi.rank() as f64);
                let strict = Ch::new(xi).class() == ChannelClass::StrictDecoherence;
                c.require(strict, || format!("{name} is not strict"));
            }
            Err(e) => c.require(false, || format!("{name}: {e}")),
        }
    }
    if let Some(r) = c.metrics.get("extremal_qudit.rank") {
        let r = *r;
        c.require(r == 2.0, || format!("extremal_qudit rank {r}"));
    }
    c.finish(0)
}

fn kraus_equals_schur(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut rng = rng_for(config.seed, 1);
    for d in 2..=6 {
        for _ in 0..100 {
            let rank = rng.random_range(1..=d);
            let ch = Ch::from_matrix(&random_correlation(d, rank, &mut rng)).expect("valid");
            let rho = Dm::new(random_density(d, d, &mut rng)).expect("valid");
            let o = random_hermitian::<f64, _>(d, &mut rng);
            let k = ch.canonical_kraus();
            let s = k
                .apply_schrodinger(rho.matrix())
                .and_then(|a| a.sub(ch.apply_schrodinger(&rho)?.matrix()))
                .map_or(f64::INFINITY, |m| m.max_abs());
            let h = k
                .apply_heisenberg(&o)
                .and_then(|a| a.sub(&ch.apply_heisenberg(&o)?))
                .map_or(f64::INFINITY, |m| m.max_abs() / (1.0 + o.max_abs()));
            c.max("max_error", s.max(h));
            c.require(k.all_diagonal(0.0), || format!("non-diagonal Kraus operator, d={d}"));
        }
    }
    let err = c.metrics["max_error"];
    c.require(err <= 1e-10, || format!("max error {err:e}"));
    c.finish(1)
}

fn qubit_recovery(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut rng = rng_for(config.seed, 2);
    for i in 0..200 {
        let ch = Ch::from_matrix(&random_correlation(2, 2, &mut rng)).expect("valid");
        let rho = Dm::new(random_pure_density(2, &mut rng)).expect("valid");
        let dec = ru_decompose_qubit(&ch).expect("qubit");
        match simulate_feedback_recovery(&ch, &dec, &rho, 1000, sub_seed(config.seed, 2, i)) {
            Ok(rep) => {
                c.min("min_fidelity", rep.worst_case_fidelity);
                let s = von_neumann_entropy(&ch.xi().scale_real(0.5)).unwrap_or(f64::NAN);
                c.max("max_entropy_mismatch", (rep.classical_info_bits - s).abs());
            }
            Err(e) => c.require(false, || format!("instance {i}: {e}")),
        }
    }
    let f = c.metrics.get("min_fidelity").copied().unwrap_or(f64::NAN);
    let m = c.metrics.get("max_entropy_mismatch").copied().unwrap_or(f64::NAN);
    c.require(f >= 1.0 - 1e-9, || format!("min fidelity {f}"));
    c.require(m <= 1e-9, || format!("H(p) vs S(xi/2) mismatch {m:e}"));
    c.finish(2)
}

fn qutrit_recovery(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let ch = Ch::from_matrix(&fixtures::qutrit_gap()).expect("valid");
    match ru_decompose_search(&ch, &SearchConfig::with_seed(config.seed)) {
        Ok(found) => {
            let dec = &found.decomposition;
            c.metric("residual", found.residual);
            c.metric("terms", dec.len() as f64);
            let mut rng = rng_for(config.seed, 3);
            for i in 0..20 {
                let rho = Dm::new(random_pure_density(3, &mut rng)).expect("valid");
                match simulate_feedback_recovery(&ch, dec, &rho, 100, sub_seed(config.seed, 3, i)) {
                    Ok(rep) => c.min("min_fidelity", rep.worst_case_fidelity),
                    Err(e) => c.require(false, || e.to_string()),
                }
            }
            let s = von_neumann_entropy(&ch.xi().scale_real(1.0 / 3.0)).unwrap_or(f64::NAN);
            let gap = dec.entropy_bits() - s;
            c.metric("h_p", dec.entropy_bits());
            c.metric("s_xi_over_d", s);
            c.metric("gap", gap);
            c.require(found.residual <= 1e-8, || format!("residual {:e}", found.residual));
            let f = c.metrics.get("min_fidelity").copied().unwrap_or(f64::NAN);
            c.require(f >= 1.0 - 1e-7, || format!("min fidelity {f}"));
            c.require(gap > 0.01, || format!("gap {gap}"));
        }
        Err(e) => c.require(false, || format!("search failed: {e:?}")),
    }
    c.finish(3)
}

fn extremal_impossibility(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let ch = Ch::from_matrix(&fixtures::extremal_qudit()).expect("valid");
    let cert = extremality_test(&ch, config.tol);
    c.metric("kraus_rank", cert.kraus_rank as f64);
    c.metric("gram_rank", cert.gram_rank as f64);
    c.require(cert.verdict == Verdict::Extremal, || "not extremal".into());
    c.require(cert.kraus_rank == 2, || format!("kraus rank {}", cert.kraus_rank));
    c.require(cert.not_random_unitary, || "no NotRandomUnitary flag".into());
    let search = ru_decompose_search(&ch, &SearchConfig::with_seed(config.seed));
    c.require(matches!(search, Err(SearchFailure::NotRandomUnitary(_))), || {
        "search did not return the certificate".into()
    });
    match optimize_recovery_measurement(&ch, 4, config.restarts, config.seed) {
        Ok(rep) => {
            let f = rep.average_entanglement_fidelity;
            c.metric("best_fidelity", f);
            c.require(f < 1.0 - 1e-3, || format!("best fidelity {f}"));
        }
        Err(e) => c.require(false, || e.to_string()),
    }
    c.finish(4)
}

fn planted<R: Rng>(d: usize, terms: usize, rng: &mut R) -> RandomUnitaryDecomposition<f64> {
    let w = random_probabilities(terms, 0.05, rng);
    let pvs = (0..terms).map(|_| PhaseVector::new(random_phases(d, rng))).collect();
    RandomUnitaryDecomposition::new(w, pvs).expect("valid")
}

fn entropy_routes(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut rng = rng_for(config.seed, 5);
    for i in 0..200 {
        let d = 2 + i % 4;
        let dec = planted(d, rng.random_range(1..=d + 1), &mut rng);
        let ch = Ch::from_matrix(&dec.reconstruct()).expect("valid");
        let rho = Dm::new(random_density(d, rng.random_range(1..=d), &mut rng)).expect("valid");
        let a = entropy_exchange(&ch, &rho);
        let b = entropy_exchange_via_dilation(&build_dilation(&ch), &rho);
        let r = entropy_exchange_ru(&dec, &rho);
        match (a, b, r) {
            (Ok(a), Ok(b), Ok(r)) => {
                c.max("max_dilation_gap", (a - b).abs());
                c.max("max_mixture_gap", (a - r).abs());
            }
            _ => c.require(false, || format!("instance {i} errored")),
        }
    }
    let g = c.metrics["max_dilation_gap"].max(c.metrics["max_mixture_gap"]);
    c.require(g <= 1e-9, || format!("route disagreement {g:e}"));
    c.finish(5)
}

fn fourier(d: usize, rows: &[usize], w: Vec<f64>) -> RandomUnitaryDecomposition<f64> {
    let pvs = rows
        .iter()
        .map(|&j| PhaseVector::new((0..d).map(|k| std::f64::consts::TAU * (j * k) as f64 / d as f64).collect()))
        .collect();
    RandomUnitaryDecomposition::new(w, pvs).expect("valid")
}

fn entropy_bounds(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut rng = rng_for(config.seed, 6);
    for i in 0..100 {
        let d = 2 + i % 4;
        let dec = planted(d, rng.random_range(1..=d + 1), &mut rng);
        let ch = Ch::from_matrix(&dec.reconstruct()).expect("valid");
        let rho = Dm::new(random_density(d, rng.random_range(1..=d), &mut rng)).expect("valid");
        match check_bounds(&ch, &rho, Some(&dec)) {
            Ok(rep) => {
                c.max("max_production_excess", rep.entropy_production - rep.s_ex);
                c.min("min_information_gap", rep.bound_gap.unwrap_or(f64::NAN));
            }
            Err(e) => c.require(false, || format!("instance {i}: {e}")),
        }
    }
    let ex = c.metrics["max_production_excess"];
    let gap = c.metrics["min_information_gap"];
    c.require(ex <= 1e-9, || format!("production bound violated by {ex:e}"));
    c.require(gap >= -1e-9, || format!("information bound violated by {gap:e}"));

    // equality cases: orthogonal mixtures; strict cases: non-orthogonal ones
    let mut constructed: Vec<(String, RandomUnitaryDecomposition<f64>)> = Vec::new();
    for d in 2..=5 {
        let all: Vec<usize> = (0..d).collect();
        constructed.push((format!("fourier_full_d{d}"), fourier(d, &all, random_probabilities(d, 0.05, &mut rng))));
        constructed.push((format!("fourier_pair_d{d}"), fourier(d, &[0, d - 1], vec![0.6, 0.4])));
        constructed.push((format!("planted_d{d}"), planted(d, 2, &mut rng)));
    }
    let qubit = Ch::from_matrix(&random_correlation(2, 2, &mut rng)).expect("valid");
    constructed.push(("qubit_exact".into(), ru_decompose_qubit(&qubit).expect("qubit")));
    if let Ok(found) = ru_decompose_search(
        &Ch::from_matrix(&fixtures::qutrit_gap()).expect("valid"),
        &SearchConfig::with_seed(config.seed),
    ) {
        constructed.push(("qutrit_gap".into(), found.decomposition));
    }
    let mut equal_cases = 0.0;
    for (name, dec) in &constructed {
        let d = dec.dim();
        let Ok(ch) = Ch::from_matrix(&dec.reconstruct()) else {
            c.require(false, || format!("{name} invalid"));
            continue;
        };
        match check_bounds(&ch, &Dm::maximally_mixed(d), Some(dec)) {
            Ok(rep) => {
                let gap = rep.bound_gap.unwrap_or(f64::NAN);
                let equal = gap.abs() <= 1e-9;
                let orth = orthogonality_check(dec, 1e-9);
                if equal {
                    equal_cases += 1.0;
                }
                c.require(equal == orth, || format!("{name}: gap {gap:e}, orthogonal {orth}"));
            }
            Err(e) => c.require(false, || format!("{name}: {e}")),
        }
    }
    c.metric("constructed_cases", constructed.len() as f64);
    c.metric("equality_cases", equal_cases);
    c.finish(6)
}

fn decay_and_commutation(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut rng = rng_for(config.seed, 7);
    for i in 0..20 {
        let d = 2 + i % 4;
        let ch = Ch::from_matrix(&random_correlation(d, d, &mut rng)).expect("valid");
        let rho = Dm::new(random_density(d, d, &mut rng)).expect("valid");
        let mut state = rho.clone();
        for n in 1..=20u32 {
            state = ch.apply_schrodinger(&state).expect("dims");
            let direct = ch.iterate(n).apply_schrodinger(&rho).expect("dims");
            for k in 0..d {
                for l in 0..d {
                    let predicted = ch.xi()[(l, k)].norm().powi(n as i32) * rho.matrix()[(k, l)].norm();
                    c.max("max_decay_error", (state.matrix()[(k, l)].norm() - predicted).abs());
                    c.max("max_iterate_error", (direct.matrix()[(k, l)].norm() - predicted).abs());
                }
            }
        }
        let other = Ch::from_matrix(&random_correlation(d, d, &mut rng)).expect("valid");
        let ab = ch.compose(&other).expect("dims");
        let ba = other.compose(&ch).expect("dims");
        c.require(ab.xi() == ba.xi(), || format!("compose not commutative at d={d}"));
    }
    let e = c.metrics["max_decay_error"].max(c.metrics["max_iterate_error"]);
    c.require(e <= 1e-10, || format!("decay error {e:e}"));

    let ch = Ch::from_matrix(&fixtures::qubit(0.6)).expect("valid");
    let dec = ru_decompose_qubit(&ch).expect("qubit");
    for _ in 0..20 {
        let mut seq: Vec<usize> = (0..12).map(|_| rng.random_range(0..dec.len())).collect();
        let a = correction_for_outcomes(&dec, &seq).expect("in range");
        seq.shuffle(&mut rng);
        let b = correction_for_outcomes(&dec, &seq).expect("in range");
        seq.sort_unstable();
        let s = correction_for_outcomes(&dec, &seq).expect("in range");
        c.require(a == b && a == s, || "correction depends on outcome order".into());
    }
    let rho = Dm::new(random_pure_density(2, &mut rng)).expect("valid");
    match iterated_recovery(&ch, &dec, 5, &rho, config.seed) {
        Ok(rep) => {
            c.metric("iterated_fidelity", rep.worst_case_fidelity);
            c.require(rep.worst_case_fidelity >= 1.0 - 1e-8, || "iterated recovery fidelity".into());
        }
        Err(e) => c.require(false, || e.to_string()),
    }
    c.finish(7)
}

fn rank_bound(config: &SuiteConfig) -> CriterionResult {
    let mut c = Check::new();
    let mut rng = rng_for(config.seed, 8);
    let mut extremal = 0.0;
    let mut extremal_multi = 0.0;
    for i in 0..1000 {
        let d = 2 + i % 5;
        let rank = rng.random_range(1..=d);
        let ch = Ch::from_matrix(&random_correlation(d, rank, &mut rng)).expect("valid");
        let cert = extremality_test(&ch, config.tol);
        if cert.verdict == Verdict::Extremal {
            extremal += 1.0;
            if cert.kraus_rank >= 2 {
                extremal_multi += 1.0;
            }
        }
        c.require(cert.rank_bound_holds(d), || {
            format!("extremal with r={} at d={d}", cert.kraus_rank)
        });
    }
    c.metric("extremal_certificates", extremal);
    c.metric("extremal_with_r_ge_2", extremal_multi);
    c.finish(8)
}
