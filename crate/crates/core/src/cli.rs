//! Command-line front end: matrix files, subcommands and reports.
//!
//! Every command prints one JSON report (sorted keys) on standard output,
//! except `decay` which defaults to CSV. Exit codes: 0 success, 1 invalid
//! input, 2 impossibility certificate, 3 inconclusive search.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{validate_correlation, ChannelClass, DensityMatrix, SchurChannel};
use crate::decompose::{
    extremality_test, orthogonality_check, ru_decompose_search, ExtremalityCertificate, Method,
    RandomUnitaryDecomposition, SearchConfig, SearchFailure, SearchSuccess, Verdict,
};
use crate::dilation::{
    build_dilation, default_outcomes, env_reduced_state, iterated_recovery, optimize_recovery_measurement,
    simulate_feedback_recovery, RecoveryReport,
};
use crate::entropy::{check_bounds, entropy_exchange, entropy_exchange_ru, entropy_exchange_via_dilation};
use crate::error::Error;
use crate::numerics::{von_neumann_entropy, ComplexMatrix};
use crate::suite::{run_suite, Status, SuiteConfig};
use crate::C;

type M = ComplexMatrix<f64>;
type Ch = SchurChannel<f64>;
type Dm = DensityMatrix<f64>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IMPOSSIBLE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "decolab", version, about = "Decoherence channels as Schur maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Correlation matrix file.
    #[arg(long, global = true)]
    pub xi: Option<PathBuf>,

    /// Density matrix file (defaults to the maximally mixed state).
    #[arg(long, global = true)]
    pub state: Option<PathBuf>,

    #[arg(long, global = true, env = "DECOLAB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Validation and extremality tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long, global = true, default_value_t = 10_000)]
    pub shots: usize,

    #[arg(long, global = true, default_value_t = 256)]
    pub restarts: usize,

    /// Outcome count of optimized measurements (default r²).
    #[arg(long, global = true)]
    pub outcomes: Option<usize>,

    /// Channel applications for `iterate-recover`.
    #[arg(long, global = true, default_value_t = 5)]
    pub steps: usize,

    /// Largest power for `decay`.
    #[arg(long, global = true, default_value_t = 20)]
    pub n_max: u32,

    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,

    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check that a matrix is a correlation matrix and classify the channel.
    Validate,
    /// Canonical Kraus operators (diagonals).
    Kraus,
    /// Choi extremality test.
    Extremal,
    /// Random-unitary decomposition.
    Decompose,
    /// Environment vectors of the isometric dilation.
    Dilate,
    /// Environment measurement with feedback, or the best measurement when
    /// perfect recovery is impossible.
    Recover,
    /// Repeated channel use with a single count-based correction.
    IterateRecover,
    /// Entropy exchange by every available route.
    Entropy,
    /// Entropy-production and information bounds.
    Bounds,
    /// Off-diagonal decay under repeated application.
    Decay,
    /// Regression suite over the reference matrices.
    PaperSuite {
        /// Perturb an off-diagonal entry of the extremal reference matrix.
        #[arg(long)]
        perturb: Option<f64>,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Matrix document `{"dim": d, "entries": [[[re, im], ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &M) -> Self {
        Self {
            dim: m.rows(),
            entries: (0..m.rows())
                .map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<M, String> {
        if self.entries.len() != self.dim {
            return Err(format!("expected {} rows, found {}", self.dim, self.entries.len()));
        }
        let mut data = Vec::with_capacity(self.dim * self.dim);
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != self.dim {
                return Err(format!("row {i} has {} entries, expected {}", row.len(), self.dim));
            }
            for (j, [re, im]) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(format!("entry ({i}, {j}) is not finite"));
                }
                data.push(C::new(*re, *im));
            }
        }
        M::new(self.dim, self.dim, data).map_err(|e| e.to_string())
    }
}

/// Parses a matrix document; errors carry line and column.
pub fn parse_matrix(text: &str) -> Result<M, String> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| format!("malformed matrix JSON at line {} column {}: {e}", e.line(), e.column()))?;
    file.to_matrix()
}

pub fn matrix_to_json(m: &M) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(m)).expect("finite matrix serializes")
}

/// One row of a decay curve; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: u32,
    pub k: usize,
    pub l: usize,
    /// `|ρ_kl|` after `n` successive applications.
    pub observed: f64,
    /// `|ξ_lk|^n |ρ_kl|`.
    pub predicted: f64,
}

/// Off-diagonal moduli after `1..=n_max` successive applications next to the
/// closed-form prediction.
pub fn decay_curve(ch: &Ch, rho: &Dm, n_max: u32) -> crate::Result<Vec<DecayRow>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let d = ch.dim();
    rho.matrix().require_dim(d)?;
    let mut state = rho.clone();
    let mut rows = Vec::new();
    for n in 1..=n_max {
        state = ch.apply_schrodinger(&state)?;
        for k in 0..d {
            for l in 0..d {
                if k == l {
                    continue;
                }
                rows.push(DecayRow {
                    n,
                    k: k + 1,
                    l: l + 1,
                    observed: state.matrix()[(k, l)].norm(),
                    predicted: ch.xi()[(l, k)].norm().powi(n as i32) * rho.matrix()[(k, l)].norm(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("n,k,l,observed,predicted\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:e},{:e}", r.n, r.k, r.l, r.observed, r.predicted);
    }
    out
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: EXIT_INVALID,
            message: e.to_string(),
        }
    }
}

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Self {
            code: EXIT_INVALID,
            message,
        }
    }
}

enum Body {
    Json(Value),
    Text(String),
}

struct Outcome {
    code: i32,
    body: Body,
}

impl Outcome {
    fn ok(v: Value) -> Self {
        Self {
            code: EXIT_OK,
            body: Body::Json(v),
        }
    }
}

fn read_matrix(path: &Path) -> Result<M, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_matrix(&text).map_err(|e| Failure::from(format!("{}: {e}", path.display())))
}

fn cplx(z: C<f64>) -> Value {
    json!([z.re, z.im])
}

fn matrix_value(m: &M) -> Value {
    serde_json::to_value(MatrixFile::from_matrix(m)).expect("serializable")
}

fn vector_value(v: &[C<f64>]) -> Value {
    Value::Array(v.iter().map(|z| cplx(*z)).collect())
}

fn class_name(c: ChannelClass) -> &'static str {
    match c {
        ChannelClass::StrictDecoherence => "strict_decoherence",
        ChannelClass::Border => "border",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::QubitExact => "qubit_exact",
        Method::Spectral => "spectral",
        Method::Peeling => "peeling",
        Method::DirectFit => "direct_fit",
    }
}

fn certificate_value(c: &ExtremalityCertificate<f64>, d: usize) -> Value {
    json!({
        "kraus_rank": c.kraus_rank,
        "gram_rank": c.gram_rank,
        "singular_values": c.singular_values,
        "tol": c.tol,
        "verdict": match c.verdict { Verdict::Extremal => "extremal", Verdict::NotExtremal => "not_extremal" },
        "not_random_unitary": c.not_random_unitary,
        "rank_bound_holds": c.rank_bound_holds(d),
    })
}

fn decomposition_value(dec: &RandomUnitaryDecomposition<f64>) -> Value {
    json!({
        "weights": dec.weights(),
        "phases": dec.phase_vectors().iter().map(|p| p.phases().to_vec()).collect::<Vec<_>>(),
        "entropy_bits": dec.entropy_bits(),
        "orthogonal": orthogonality_check(dec, 1e-9),
    })
}

fn success_value(s: &SearchSuccess<f64>) -> Value {
    let mut v = decomposition_value(&s.decomposition);
    v["residual"] = json!(s.residual);
    v["method"] = json!(method_name(s.method));
    v
}

fn recovery_value(r: &RecoveryReport<f64>) -> Value {
    json!({
        "average_entanglement_fidelity": r.average_entanglement_fidelity,
        "worst_case_fidelity": r.worst_case_fidelity,
        "per_outcome_fidelity": r.per_outcome_fidelity,
        "outcome_probabilities": r.outcome_probabilities,
        "classical_info_bits": r.classical_info_bits,
        "corrections": r.corrections.iter().map(|p| p.phases().to_vec()).collect::<Vec<_>>(),
        "measurement": r.measurement.outcome_vectors.iter().map(|v| vector_value(v)).collect::<Vec<_>>(),
        "conditional_state_error": r.conditional_state_error,
        "shots": r.shots,
        "empirical_frequencies": r.empirical_frequencies,
        "outcome_counts": r.outcome_counts,
    })
}

struct Ctx<'a> {
    cli: &'a Cli,
}

impl Ctx<'_> {
    fn channel(&self) -> Result<Ch, Failure> {
        let path = self.cli.xi.as_deref().ok_or_else(|| Failure::from("--xi is required".to_string()))?;
        let m = read_matrix(path)?;
        Ok(Ch::new(validate_correlation(&m, self.cli.tol)?))
    }

    fn state(&self, d: usize) -> Result<Dm, Failure> {
        match self.cli.state.as_deref() {
            Some(path) => {
                let rho = Dm::new(read_matrix(path)?)?;
                rho.matrix().require_dim(d)?;
                Ok(rho)
            }
            None => Ok(Dm::maximally_mixed(d)),
        }
    }

    fn search_config(&self) -> SearchConfig<f64> {
        SearchConfig::with_seed(self.cli.seed)
    }

    fn search(&self, ch: &Ch) -> Result<SearchSuccess<f64>, SearchFailure<f64>> {
        ru_decompose_search(ch, &self.search_config())
    }

    fn tolerances(&self) -> Value {
        let s = self.search_config();
        json!({
            "validation": self.cli.tol,
            "extremality": self.cli.tol,
            "residual": s.residual_tol,
            "min_weight": s.min_weight,
            "unimodular": s.unimodular_tol,
            "decomposition_check": crate::dilation::DECOMPOSITION_TOL,
        })
    }
}

fn search_failure(code_if_impossible: i32, f: &SearchFailure<f64>, d: usize) -> (i32, Value) {
    match f {
        SearchFailure::NotRandomUnitary(cert) => (
            code_if_impossible,
            json!({"certificate": "not_random_unitary", "extremality": certificate_value(cert, d)}),
        ),
        SearchFailure::Inconclusive { best_residual } => (
            EXIT_INCONCLUSIVE,
            json!({"certificate": "inconclusive", "best_residual": best_residual}),
        ),
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let ctx = Ctx { cli };
    if cli.csv && !matches!(cli.command, Command::Decay | Command::PaperSuite { .. }) {
        return Err("--csv is available for decay and paper-suite only".to_string().into());
    }
    match &cli.command {
        Command::Validate => {
            let ch = ctx.channel()?;
            let spec = ch.correlation().spectrum();
            Ok(Outcome::ok(json!({
                "dim": ch.dim(),
                "rank": ch.correlation().rank(),
                "class": class_name(ch.class()),
                "max_off_diagonal": ch.correlation().max_off_diagonal(),
                "eigenvalues": spec.eigenvalues,
            })))
        }
        Command::Kraus => {
            let ch = ctx.channel()?;
            let k = ch.canonical_kraus();
            Ok(Outcome::ok(json!({
                "count": k.len(),
                "diagonals": (0..k.len()).map(|i| vector_value(&k.diagonal(i))).collect::<Vec<_>>(),
                "completeness_defect": k.completeness_defect(),
            })))
        }
        Command::Extremal => {
            let ch = ctx.channel()?;
            let cert = extremality_test(&ch, cli.tol);
            let code = if cert.not_random_unitary { EXIT_IMPOSSIBLE } else { EXIT_OK };
            Ok(Outcome {
                code,
                body: Body::Json(certificate_value(&cert, ch.dim())),
            })
        }
        Command::Decompose => {
            let ch = ctx.channel()?;
            Ok(match ctx.search(&ch) {
                Ok(s) => Outcome::ok(success_value(&s)),
                Err(f) => {
                    let (code, v) = search_failure(EXIT_IMPOSSIBLE, &f, ch.dim());
                    Outcome {
                        code,
                        body: Body::Json(v),
                    }
                }
            })
        }
        Command::Dilate => {
            let ch = ctx.channel()?;
            let model = build_dilation(&ch);
            let mut v = json!({
                "sys_dim": model.sys_dim(),
                "env_dim": model.env_dim(),
                "env_vectors": model.env_vectors().iter().map(|e| vector_value(e)).collect::<Vec<_>>(),
                "gram_defect": model.gram_defect(ch.xi())?,
                "isometry_defect": model.isometry_defect(),
            });
            if cli.state.is_some() {
                let rho = ctx.state(ch.dim())?;
                let env = env_reduced_state(&model, &rho)?;
                v["env_state"] = matrix_value(env.matrix());
                v["env_entropy_bits"] = json!(von_neumann_entropy(env.matrix())?);
                v["system_output"] = matrix_value(&model.system_output(&rho)?);
            }
            Ok(Outcome::ok(v))
        }
        Command::Recover => {
            let ch = ctx.channel()?;
            let rho = ctx.state(ch.dim())?;
            match ctx.search(&ch) {
                Ok(s) => {
                    let rep = simulate_feedback_recovery(&ch, &s.decomposition, &rho, cli.shots, cli.seed)?;
                    Ok(Outcome::ok(json!({
                        "decomposition": success_value(&s),
                        "recovery": recovery_value(&rep),
                        "fidelity": rep.worst_case_fidelity,
                        "info_bits": rep.classical_info_bits,
                    })))
                }
                Err(f) => {
                    let (code, mut v) = search_failure(EXIT_IMPOSSIBLE, &f, ch.dim());
                    let r = build_dilation(&ch).env_dim();
                    let outcomes = cli.outcomes.unwrap_or_else(|| default_outcomes(r));
                    let rep = optimize_recovery_measurement(&ch, outcomes, cli.restarts, cli.seed)?;
                    v["best_fidelity"] = json!(rep.average_entanglement_fidelity);
                    v["optimized_measurement"] = recovery_value(&rep);
                    Ok(Outcome {
                        code,
                        body: Body::Json(v),
                    })
                }
            }
        }
        Command::IterateRecover => {
            let ch = ctx.channel()?;
            let rho = ctx.state(ch.dim())?;
            match ctx.search(&ch) {
                Ok(s) => {
                    let rep = iterated_recovery(&ch, &s.decomposition, cli.steps, &rho, cli.seed)?;
                    Ok(Outcome::ok(json!({
                        "decomposition": success_value(&s),
                        "steps": cli.steps,
                        "recovery": recovery_value(&rep),
                        "fidelity": rep.worst_case_fidelity,
                        "info_bits": rep.classical_info_bits,
                    })))
                }
                Err(f) => {
                    let (code, v) = search_failure(EXIT_IMPOSSIBLE, &f, ch.dim());
                    Ok(Outcome {
                        code,
                        body: Body::Json(v),
                    })
                }
            }
        }
        Command::Entropy => {
            let ch = ctx.channel()?;
            let rho = ctx.state(ch.dim())?;
            let dec = ctx.search(&ch).ok();
            let mixture = match &dec {
                Some(s) => Some(entropy_exchange_ru(&s.decomposition, &rho)?),
                None => None,
            };
            Ok(Outcome::ok(json!({
                "s_ex": entropy_exchange(&ch, &rho)?,
                "s_ex_via_dilation": entropy_exchange_via_dilation(&build_dilation(&ch), &rho)?,
                "s_ex_via_mixture": mixture,
            })))
        }
        Command::Bounds => {
            let ch = ctx.channel()?;
            let rho = ctx.state(ch.dim())?;
            let dec = ctx.search(&ch).ok();
            let rep = check_bounds(&ch, &rho, dec.as_ref().map(|s| &s.decomposition))?;
            Ok(Outcome::ok(json!({
                "s_ex": rep.s_ex,
                "s_ex_uniform": rep.s_ex_uniform,
                "input_entropy": rep.input_entropy,
                "output_entropy": rep.output_entropy,
                "entropy_production": rep.entropy_production,
                "h_p": rep.h_p,
                "bound_gap": rep.bound_gap,
                "orthogonal": rep.orthogonal,
                "production_bound_holds": rep.production_bound_holds(1e-9),
                "information_bound_holds": rep.information_bound_holds(1e-9),
            })))
        }
        Command::Decay => {
            let ch = ctx.channel()?;
            if cli.state.is_none() {
                return Err("--state is required".to_string().into());
            }
            let rho = ctx.state(ch.dim())?;
            let rows = decay_curve(&ch, &rho, cli.n_max)?;
            if cli.json {
                Ok(Outcome::ok(json!({ "rows": rows })))
            } else {
                Ok(Outcome {
                    code: EXIT_OK,
                    body: Body::Text(decay_csv(&rows)),
                })
            }
        }
        Command::PaperSuite { perturb } => {
            let cfg = SuiteConfig {
                seed: cli.seed,
                perturbation: *perturb,
                restarts: cli.restarts,
                tol: cli.tol,
            };
            let results = run_suite(&cfg);
            let all = results.iter().all(|r| r.status == Status::Pass);
            let code = if all { EXIT_OK } else { EXIT_INVALID };
            if cli.csv {
                let mut out = String::from("id,name,status\n");
                for r in &results {
                    let status = serde_json::to_value(r.status).expect("serializable");
                    let _ = writeln!(out, "{},{},{}", r.id, r.name, status.as_str().unwrap_or(""));
                }
                return Ok(Outcome {
                    code,
                    body: Body::Text(out),
                });
            }
            Ok(Outcome {
                code,
                body: Body::Json(json!({ "criteria": results, "all_passed": all })),
            })
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Kraus => "kraus",
        Command::Extremal => "extremal",
        Command::Decompose => "decompose",
        Command::Dilate => "dilate",
        Command::Recover => "recover",
        Command::IterateRecover => "iterate-recover",
        Command::Entropy => "entropy",
        Command::Bounds => "bounds",
        Command::Decay => "decay",
        Command::PaperSuite { .. } => "paper-suite",
    }
}

fn status_name(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_IMPOSSIBLE => "impossible",
        EXIT_INCONCLUSIVE => "inconclusive",
        _ => "error",
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I) -> CliOutput
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliOutput {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => CliOutput {
                    code: EXIT_INVALID,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let ctx = Ctx { cli: &cli };
    let mut report = json!({
        "command": command_name(&cli.command),
        "argv": argv,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "tolerances": ctx.tolerances(),
    });
    match execute(&cli) {
        Ok(Outcome {
            code,
            body: Body::Text(text),
        }) => CliOutput {
            code,
            stdout: text,
            stderr: String::new(),
        },
        Ok(Outcome {
            code,
            body: Body::Json(v),
        }) => {
            report["status"] = json!(status_name(code));
            report["exit_code"] = json!(code);
            report["result"] = v;
            CliOutput {
                code,
                stdout: pretty(&report),
                stderr: String::new(),
            }
        }
        Err(f) => {
            report["status"] = json!("error");
            report["exit_code"] = json!(f.code);
            report["error"] = json!(f.message);
            CliOutput {
                code: f.code,
                stdout: pretty(&report),
                stderr: format!("error: {}\n", f.message),
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
