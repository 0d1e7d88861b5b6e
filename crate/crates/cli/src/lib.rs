//! Command-line front end for `sdfeas`.
//!
//! [`run`] parses arguments, executes one command and returns the process
//! exit code; `main` only forwards to it, so tests can drive the whole tool
//! in-process.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | strongly feasible / certificate valid / selftest passed |
//! | 1 | weakly feasible / selftest found a violation |
//! | 2 | weakly infeasible |
//! | 3 | strongly infeasible |
//! | 64 | numerically ambiguous |
//! | 65 | input error (unreadable or malformed input, bad flags) |
//! | 66 | `approach` refused: the problem is not weakly infeasible |
//! | 70 | certificate invalid |
//! | 74 | output could not be written |

pub mod doc;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sdfeas::certs::ENVELOPE_FORMAT;
use sdfeas::gen::{generate, sweep_dim};
use sdfeas::{build_sequence, classify, verify, CertificateEnvelope, Config, Error, FeasibilityStatus, Sdfp};

use crate::doc::ProblemDocument;
use crate::report::{ApproachReport, ClassifyReport, LevelSummary, AMBIGUOUS, INPUT_ERROR, REPORT_FORMAT, REPORT_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_AMBIGUOUS: i32 = 64;
pub const EXIT_INPUT: i32 = 65;
pub const EXIT_REFUSED: i32 = 66;
pub const EXIT_INVALID: i32 = 70;
pub const EXIT_IO: i32 = 74;

/// Exit code of a classification.
pub fn status_code(s: FeasibilityStatus) -> i32 {
    match s {
        FeasibilityStatus::StronglyFeasible => 0,
        FeasibilityStatus::WeaklyFeasible => 1,
        FeasibilityStatus::WeaklyInfeasible => 2,
        FeasibilityStatus::StronglyInfeasible => 3,
    }
}

#[derive(Debug, Parser)]
#[command(name = "sdfeas", version, about = "Classify semidefinite feasibility problems and check their certificates")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for [`Config`]; unset fields keep their defaults (or, for
/// `verify`, the values stored in the certificate).
#[derive(Debug, Clone, Default, Args)]
struct TolArgs {
    /// Relative eigenvalue cutoff for rank decisions [default: 1e-8]
    #[arg(long = "tol", global = true, value_name = "X")]
    tol_rank: Option<f64>,
    /// Residual tolerance for linear membership [default: 1e-8]
    #[arg(long, global = true, value_name = "X")]
    tol_lin: Option<f64>,
    /// Smallest eigenvalue counted as positive definite [default: 1e-7]
    #[arg(long, global = true, value_name = "X")]
    tol_pd: Option<f64>,
    /// Half-width of the band where an optimal value counts as zero [default: 1e-7]
    #[arg(long, global = true, value_name = "X")]
    tol_amb: Option<f64>,
    /// Duality gap at which the barrier method stops [default: 1e-11]
    #[arg(long, global = true, value_name = "X")]
    tol_opt: Option<f64>,
    /// Relative singular-value floor for nonsingular transforms [default: 1e-12]
    #[arg(long, global = true, value_name = "X")]
    tol_det: Option<f64>,
    /// Relative size below which entries of computed directions become zero [default: 1e-9]
    #[arg(long, global = true, value_name = "X")]
    tol_snap: Option<f64>,
    /// Eigenvalue slack for PSD membership in certificates [default: 1e-7]
    #[arg(long, global = true, value_name = "X")]
    tol_psd: Option<f64>,
    /// Newton step budget per centering phase of a barrier solve [default: 200]
    #[arg(long, global = true, value_name = "N")]
    max_newton: Option<usize>,
    /// Barrier parameter reduction per outer iteration [default: 0.2]
    #[arg(long, global = true, value_name = "X")]
    mu_factor: Option<f64>,
    /// Sweep limit of the Jacobi eigensolver [default: 100]
    #[arg(long, global = true, value_name = "N")]
    max_sweeps: Option<usize>,
    /// Largest coefficient an approach sequence may use [default: 1e20]
    #[arg(long, global = true, value_name = "X")]
    alpha_cap: Option<f64>,
}

impl TolArgs {
    fn apply(&self, mut c: Config) -> Config {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(tol_rank, tol_lin, tol_pd, tol_amb, tol_opt, tol_det, tol_snap, tol_psd, max_newton, mu_factor, max_sweeps, alpha_cap);
        c
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify one or more problem documents (several are solved in parallel)
    Classify {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the certificate here; with several inputs, a directory
        /// receiving one `<name>.cert` per input
        #[arg(long, value_name = "PATH")]
        cert: Option<PathBuf>,
        /// Print one JSON report per line
        #[arg(long)]
        json: bool,
    },
    /// Check a certificate (or a JSON classification report) against a problem
    Verify {
        problem: PathBuf,
        certificate: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build a point of L + c within eps of the PSD cone for a weakly infeasible problem
    Approach {
        problem: PathBuf,
        #[arg(long, value_name = "X")]
        eps: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run the generated sweep and the invariant suites
    Selftest(SelftestArgs),
    /// Print a generated problem of known status as a document
    Generate {
        #[arg(long, value_enum)]
        status: StatusArg,
        #[arg(long)]
        n: usize,
        /// Dimension of L [default: chosen from the seed]
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the effective tolerances
    Config,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Largest order in the sweep (orders start at 2)
    #[arg(long = "n", default_value_t = 8)]
    max_n: usize,
    /// Seeds per (status, order)
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// First seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random congruences per status class
    #[arg(long, default_value_t = 100)]
    congruence_trials: usize,
    #[arg(long, default_value_t = 1000)]
    schur_trials: usize,
    #[arg(long, default_value_t = 1000)]
    gordan_trials: usize,
    /// Perturbations per certificate
    #[arg(long, default_value_t = 100)]
    fuzz_trials: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatusArg {
    #[value(name = "sf", alias = "strongly-feasible")]
    Sf,
    #[value(name = "wf", alias = "weakly-feasible")]
    Wf,
    #[value(name = "wi", alias = "weakly-infeasible")]
    Wi,
    #[value(name = "si", alias = "strongly-infeasible")]
    Si,
}

impl From<StatusArg> for FeasibilityStatus {
    fn from(s: StatusArg) -> Self {
        match s {
            StatusArg::Sf => FeasibilityStatus::StronglyFeasible,
            StatusArg::Wf => FeasibilityStatus::WeaklyFeasible,
            StatusArg::Wi => FeasibilityStatus::WeaklyInfeasible,
            StatusArg::Si => FeasibilityStatus::StronglyInfeasible,
        }
    }
}

/// Runs the tool with `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            return if shown {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            } else {
                let _ = err.write_all(text.as_bytes());
                EXIT_INPUT
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "sdfeas: cannot write output: {e}");
            EXIT_IO
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let cfg = cli.tol.apply(Config::default());
    let needs_valid = !matches!(cli.command, Command::Verify { .. });
    if needs_valid {
        if let Err(e) = cfg.validate() {
            writeln!(err, "sdfeas: {e}")?;
            return Ok(EXIT_INPUT);
        }
    }
    match cli.command {
        Command::Classify { inputs, cert, json } => cmd_classify(&inputs, cert.as_deref(), json, &cfg, out, err),
        Command::Verify { problem, certificate, json } => cmd_verify(&problem, &certificate, &cli.tol, json, out, err),
        Command::Approach { problem, eps, json } => cmd_approach(&problem, eps, json, &cfg, out, err),
        Command::Selftest(args) => cmd_selftest(&args, &cfg, out),
        Command::Generate { status, n, dim, seed } => cmd_generate(status.into(), n, dim, seed, out, err),
        Command::Config => {
            writeln!(out, "{}", serde_json::to_string_pretty(&cfg).expect("config serializes"))?;
            Ok(EXIT_OK)
        }
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Classifies one document. Input errors come back as reports too, so a
/// batch keeps going.
pub fn classify_path(path: &Path, cfg: &Config) -> ClassifyReport {
    let mut report = empty_report(path, cfg);
    let p = match doc::load(path, cfg) {
        Ok(p) => p,
        Err(e) => {
            report.message = Some(e.to_string());
            return report;
        }
    };
    classify_into(&p, cfg, &mut report);
    report
}

fn empty_report(path: &Path, cfg: &Config) -> ClassifyReport {
    ClassifyReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        input: display(path),
        outcome: INPUT_ERROR.into(),
        status: None,
        exit_code: EXIT_INPUT,
        message: None,
        levels: Vec::new(),
        tolerances: *cfg,
        chain: Vec::new(),
        certificate: None,
    }
}

fn classify_into(p: &Sdfp, cfg: &Config, report: &mut ClassifyReport) {
    match classify(p, cfg) {
        Ok(r) => {
            report.outcome = r.status.to_string();
            report.status = Some(r.status);
            report.exit_code = status_code(r.status);
            report.levels = r.chain.iter().map(LevelSummary::of).collect();
            report.certificate = Some(CertificateEnvelope::new(r.certificate, *cfg));
            report.chain = r.chain;
        }
        Err(e) => {
            let input_side = matches!(
                e.source,
                Error::NonFinite | Error::DimensionMismatch { .. } | Error::DependentBasis | Error::InvalidConfig(_)
            );
            report.outcome = if input_side { INPUT_ERROR } else { AMBIGUOUS }.into();
            report.exit_code = if input_side { EXIT_INPUT } else { EXIT_AMBIGUOUS };
            report.message = Some(e.source.to_string());
            report.levels = e.chain.iter().map(LevelSummary::of).collect();
            report.chain = e.chain;
        }
    }
}

fn cert_target(base: &Path, input: &Path, batch: bool) -> PathBuf {
    if batch {
        let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "problem".into());
        base.join(format!("{stem}.cert"))
    } else {
        base.to_path_buf()
    }
}

fn cmd_classify(
    inputs: &[PathBuf],
    cert: Option<&Path>,
    json: bool,
    cfg: &Config,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let reports: Vec<ClassifyReport> = inputs.par_iter().map(|p| classify_path(p, cfg)).collect();
    let batch = inputs.len() > 1;
    let mut cert_failed = false;
    if let Some(base) = cert {
        if batch {
            if let Err(e) = std::fs::create_dir_all(base) {
                writeln!(err, "sdfeas: {}: {e}", display(base))?;
                return Ok(EXIT_IO);
            }
        }
        for (input, r) in inputs.iter().zip(&reports) {
            let Some(env) = &r.certificate else {
                writeln!(err, "sdfeas: {}: no certificate to write", r.input)?;
                continue;
            };
            let target = cert_target(base, input, batch);
            let text = serde_json::to_string_pretty(env).expect("certificates serialize") + "\n";
            if let Err(e) = std::fs::write(&target, text) {
                writeln!(err, "sdfeas: {}: {e}", display(&target))?;
                cert_failed = true;
            }
        }
    }
    for r in &reports {
        if r.outcome == INPUT_ERROR {
            writeln!(err, "sdfeas: {}: {}", r.input, r.message.as_deref().unwrap_or("invalid input"))?;
        }
        if json {
            writeln!(out, "{}", serde_json::to_string(r).expect("reports serialize"))?;
        } else if batch || r.outcome != INPUT_ERROR {
            out.write_all(r.text().as_bytes())?;
        }
    }
    if cert_failed {
        return Ok(EXIT_IO);
    }
    Ok(if !batch {
        reports[0].exit_code
    } else if reports.iter().any(|r| r.exit_code == EXIT_INPUT) {
        EXIT_INPUT
    } else if reports.iter().any(|r| r.exit_code == EXIT_AMBIGUOUS) {
        EXIT_AMBIGUOUS
    } else {
        EXIT_OK
    })
}

/// Reads a certificate envelope, either bare or inside a classification report.
fn load_envelope(path: &Path) -> Result<CertificateEnvelope, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read: {e}"))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| doc::DocError::from(e).to_string())?;
    let format = value.get("format").and_then(|f| f.as_str()).unwrap_or_default();
    let env = if format == REPORT_FORMAT {
        match value.get("certificate") {
            Some(c) if !c.is_null() => c.clone(),
            _ => return Err("report carries no certificate".into()),
        }
    } else if format == ENVELOPE_FORMAT {
        value
    } else {
        return Err(format!("expected format \"{ENVELOPE_FORMAT}\" or \"{REPORT_FORMAT}\", found \"{format}\""));
    };
    let env: CertificateEnvelope = serde_json::from_value(env).map_err(|e| format!("malformed certificate: {e}"))?;
    if env.version != 1 {
        return Err(format!("unsupported certificate version {}", env.version));
    }
    Ok(env)
}

#[derive(serde::Serialize)]
struct VerifyReport<'a> {
    format: &'a str,
    version: u32,
    problem: String,
    certificate: String,
    kind: &'a str,
    status: Option<FeasibilityStatus>,
    valid: bool,
    tolerances: Config,
}

fn cmd_verify(
    problem: &Path,
    certificate: &Path,
    tol: &TolArgs,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let env = match load_envelope(certificate) {
        Ok(e) => e,
        Err(msg) => {
            writeln!(err, "sdfeas: {}: {msg}", display(certificate))?;
            return Ok(EXIT_INPUT);
        }
    };
    // A certificate is checked under the tolerances it was issued with,
    // unless flags say otherwise.
    let cfg = tol.apply(env.tolerances);
    if let Err(e) = cfg.validate() {
        writeln!(err, "sdfeas: {e}")?;
        return Ok(EXIT_INPUT);
    }
    let p = match doc::load(problem, &cfg) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "sdfeas: {}: {e}", display(problem))?;
            return Ok(EXIT_INPUT);
        }
    };
    let claimed_matches = env.status == env.certificate.status();
    let valid = match verify(&p, &env.certificate, &cfg) {
        Ok(v) => v && claimed_matches,
        Err(e @ (Error::MalformedCertificate(_) | Error::DimensionMismatch { .. })) => {
            writeln!(err, "sdfeas: {}: {e}", display(certificate))?;
            return Ok(EXIT_INPUT);
        }
        Err(e) => {
            writeln!(err, "sdfeas: {}: {e}", display(certificate))?;
            false
        }
    };
    if json {
        let r = VerifyReport {
            format: "sdfeas-verify",
            version: REPORT_VERSION,
            problem: display(problem),
            certificate: display(certificate),
            kind: env.certificate.kind(),
            status: env.status,
            valid,
            tolerances: cfg,
        };
        writeln!(out, "{}", serde_json::to_string(&r).expect("reports serialize"))?;
    } else {
        let claim = env.status.map(|s| s.to_string()).unwrap_or_else(|| "weak status".into());
        let verdict = if valid { "valid" } else { "invalid" };
        writeln!(out, "{}: {verdict} {} certificate ({claim})", display(certificate), env.certificate.kind())?;
    }
    Ok(if valid { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_approach(path: &Path, eps: f64, json: bool, cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    if !(eps > 0.0 && eps.is_finite()) {
        writeln!(err, "sdfeas: --eps must be positive and finite")?;
        return Ok(EXIT_INPUT);
    }
    let p = match doc::load(path, cfg) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "sdfeas: {}: {e}", display(path))?;
            return Ok(EXIT_INPUT);
        }
    };
    let mut report = empty_report(path, cfg);
    classify_into(&p, cfg, &mut report);
    match report.status {
        _ if report.exit_code == EXIT_INPUT || report.exit_code == EXIT_AMBIGUOUS => {
            writeln!(err, "sdfeas: {}: {}", report.input, report.message.as_deref().unwrap_or(&report.outcome))?;
            return Ok(report.exit_code);
        }
        Some(FeasibilityStatus::WeaklyInfeasible) => {}
        Some(s) => {
            writeln!(
                err,
                "sdfeas: {}: refusing: the problem is {s}; approach sequences exist only for weakly infeasible problems",
                report.input
            )?;
            return Ok(EXIT_REFUSED);
        }
        None => unreachable!("decided reports carry a status"),
    }
    let seq = match build_sequence(&p, &report.chain[0].fp, eps, cfg) {
        Ok(s) => s,
        Err(e) => {
            writeln!(err, "sdfeas: {}: {e}", report.input)?;
            return Ok(EXIT_AMBIGUOUS);
        }
    };
    let r = ApproachReport::new(report.input, seq);
    if json {
        writeln!(out, "{}", serde_json::to_string(&r).expect("reports serialize"))?;
    } else {
        out.write_all(r.text().as_bytes())?;
    }
    Ok(EXIT_OK)
}

#[derive(serde::Serialize)]
struct SelftestReport<'a> {
    format: &'a str,
    version: u32,
    max_n: usize,
    seeds: std::ops::Range<u64>,
    tolerances: Config,
    sweep: &'a suites::SweepReport,
    suites: &'a [suites::SuiteReport],
    passed: bool,
}

fn cmd_selftest(a: &SelftestArgs, cfg: &Config, out: &mut dyn Write) -> io::Result<i32> {
    let max_n = a.max_n.max(2);
    let seeds = a.seed..a.seed + a.seeds;
    let sweep = suites::sweep(max_n, seeds.clone(), cfg);
    let suite_n = max_n.min(4);
    let fuzz_n = max_n.min(5);
    let fuzz_seeds = a.seed..a.seed + a.seeds.min(3);
    let reports = vec![
        suites::congruence_invariance(suite_n, a.congruence_trials, a.seed, cfg),
        suites::schur_equivalence(a.schur_trials, a.seed),
        suites::gordan_exclusivity(a.gordan_trials, a.seed, cfg),
        suites::certificate_fuzzing(fuzz_n, fuzz_seeds, a.fuzz_trials, cfg),
    ];
    let passed = sweep.passed() && reports.iter().all(|r| r.passed());

    if a.json {
        let r = SelftestReport {
            format: report::SELFTEST_FORMAT,
            version: REPORT_VERSION,
            max_n,
            seeds,
            tolerances: *cfg,
            sweep: &sweep,
            suites: &reports,
            passed,
        };
        writeln!(out, "{}", serde_json::to_string(&r).expect("reports serialize"))?;
    } else {
        writeln!(out, "sweep: orders 2..={max_n}, seeds {}..{}", seeds.start, seeds.end)?;
        writeln!(out, "{:<20} {:>9} {:>8} {:>9} {:>6}", "status", "instances", "correct", "ambiguous", "wrong")?;
        for row in &sweep.rows {
            writeln!(
                out,
                "{:<20} {:>9} {:>8} {:>9} {:>6}",
                row.status.to_string(),
                row.instances,
                row.correct,
                row.ambiguous,
                row.wrong
            )?;
        }
        writeln!(
            out,
            "direction bound 1 <= m <= n-1: {} checked, {} undecided",
            sweep.partition_checks, sweep.partition_ambiguous
        )?;
        writeln!(out)?;
        writeln!(out, "{:<22} {:>7} {:>9} {:>10}", "suite", "checks", "ambiguous", "violations")?;
        for r in &reports {
            writeln!(out, "{:<22} {:>7} {:>9} {:>10}", r.name, r.checks, r.ambiguous, r.violations.len())?;
        }
        for v in sweep.violations.iter().chain(reports.iter().flat_map(|r| r.violations.iter())) {
            writeln!(out, "violation: {v}")?;
        }
        writeln!(out, "result: {}", if passed { "pass" } else { "FAIL" })?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_generate(
    status: FeasibilityStatus,
    n: usize,
    dim: Option<usize>,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    if n < 1 || (status == FeasibilityStatus::WeaklyInfeasible && n < 2) {
        writeln!(err, "sdfeas: no {status} instance of order {n}")?;
        return Ok(EXIT_INPUT);
    }
    let dim = dim.unwrap_or_else(|| sweep_dim(status, n, seed));
    match generate(status, n, dim, seed) {
        Ok(g) => {
            let name = format!("generated {status} n={n} dim={dim} seed={seed}");
            writeln!(out, "{}", ProblemDocument::from_problem(&g.problem, Some(name)).to_json())?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            writeln!(err, "sdfeas: {e}")?;
            Ok(EXIT_INPUT)
        }
    }
}
