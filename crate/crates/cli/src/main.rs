//! `qlab`: batch front-end for the qlab-core routines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use qlab_core::classifier::{ConditionKind, ConditionReport};
use qlab_core::formats::csv_number;
use qlab_core::mean_inequality::sweep;
use qlab_core::modulus::spherical_norm_profile;
use qlab_core::suite::{radii_log_spaced, run_suite, DEFAULT_SEED, VERSION};
use qlab_core::{
    norm_divergence, ring_modulus, verify_lemma31, Classifier, ExtremalMap, FieldSpec, FunctionSpec,
    QlabError,
};

#[derive(Parser, Debug)]
#[command(name = "qlab", version, about = "Numerical laboratory for monotone maps, divergence conditions and extremal radial maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Classify the divergence conditions for a function Φ.
    CheckPhi {
        /// Function spec: JSON text, a JSON file, or shorthand like `power:1,2`.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        n: usize,
        /// Exponent p (defaults to n - 1).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 40)]
        kmax: usize,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate both sides of the mean inequality.
    #[command(name = "verify-lemma31")]
    #[serde(rename = "verify-lemma31")]
    VerifyLemma31 {
        /// Field spec: JSON, a JSON file, or shorthand like `power:1,-1`.
        #[arg(long = "K", required_unless_present = "sweep")]
        k: Option<String>,
        #[arg(long, required_unless_present = "sweep")]
        phi: Option<String>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, required_unless_present = "sweep")]
        n: Option<usize>,
        /// Run the randomized suite instead of a single case.
        #[arg(long)]
        sweep: bool,
        #[arg(long, env = "QLAB_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        json: bool,
    },
    /// Build the extremal radial map and write its profile.
    BuildExtremal {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        rmin: f64,
        /// CSV output path for the profile.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spherical (n-1)-norms of Q and the divergence of ∫ dr/‖Q‖.
    NormProfile {
        #[arg(long = "Q")]
        q: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 32)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Modulus of the spherical ring r < |x| < R.
    RingModulus {
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the verification battery.
    Suite {
        #[arg(long, env = "QLAB_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    /// A checked inequality or bound does not hold (exit 1).
    Verification(String),
    /// Malformed arguments or specs (exit 2).
    Input(anyhow::Error),
}

impl From<QlabError> for Failure {
    fn from(e: QlabError) -> Self {
        match e {
            QlabError::Bracket(_) => Failure::Verification(e.to_string()),
            other => Failure::Input(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome = Result<bool, Failure>;

/// Reads a spec argument: inline JSON, shorthand, or a path to a JSON file.
fn spec_text(arg: &str) -> anyhow::Result<String> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') {
        return Ok(trimmed.to_string());
    }
    let path = Path::new(trimmed);
    if !trimmed.contains(':') || path.is_file() {
        return std::fs::read_to_string(path).with_context(|| format!("reading spec file `{trimmed}`"));
    }
    Ok(trimmed.to_string())
}

fn function_spec(arg: &str) -> Result<FunctionSpec, Failure> {
    Ok(FunctionSpec::parse(&spec_text(arg)?)?)
}

fn field_spec(arg: &str) -> Result<FieldSpec, Failure> {
    Ok(FieldSpec::parse(&spec_text(arg)?)?)
}

fn header(config: &Value) -> String {
    format!("# qlab {VERSION}\n# config: {config}\n")
}

fn with_meta(config: &Value, body: Value) -> Value {
    let mut out = json!({ "tool": "qlab", "version": VERSION, "config": config });
    if let (Some(o), Value::Object(b)) = (out.as_object_mut(), body) {
        o.extend(b);
    }
    out
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values serialize"));
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6e}")
    } else {
        format!("{x}")
    }
}

fn condition_rows(reports: &[ConditionReport]) -> String {
    let mut s = format!(
        "{:<5} {:>6} {:>13} {:<12} {:>13} {:>13} {:>13}\n",
        "cond", "p", "lower", "verdict", "partial", "tail", "last_block"
    );
    for r in reports {
        let last = r.block_sums.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{:<5} {:>6} {:>13} {:<12} {:>13} {:>13} {:>13}",
            r.kind.tag.name(),
            r.kind.p,
            fmt_num(r.lower),
            r.verdict.to_string(),
            fmt_num(r.partial_sum),
            fmt_num(r.tail_estimate),
            fmt_num(last)
        );
    }
    s
}

fn check_phi(config: &Value, phi: &str, n: usize, p: Option<f64>, kmax: usize, as_json: bool) -> Outcome {
    if n < 2 {
        return Err(QlabError::spec("n", "dimension must be at least 2").into());
    }
    let spec = function_spec(phi)?;
    let map = spec.build()?;
    let p = p.unwrap_or((n - 1) as f64);
    let classifier = Classifier::with_kmax(kmax);
    let equiv = classifier.classify_all_equivalent(&map, p)?;
    let mut reports = equiv.reports.clone();
    reports.push(classifier.classify(&map, ConditionKind::t42(n))?);
    reports.push(classifier.classify(&map, ConditionKind::l51())?);
    if as_json {
        print_json(&with_meta(
            config,
            json!({
                "convex": equiv.convex,
                "consistent": equiv.consistent,
                "warnings": equiv.warnings,
                "conditions": reports,
            }),
        ));
    } else {
        print!("{}", header(config));
        print!("{}", condition_rows(&reports));
        println!("convex: {}  consistent: {}", equiv.convex, equiv.consistent);
        for w in &equiv.warnings {
            println!("warning: {w}");
        }
    }
    Ok(equiv.consistent)
}

#[allow(clippy::too_many_arguments)]
fn verify(
    config: &Value,
    k: Option<&str>,
    phi: Option<&str>,
    p: Option<f64>,
    n: Option<usize>,
    run_sweep: bool,
    seed: u64,
    trials: usize,
    as_json: bool,
) -> Outcome {
    if run_sweep {
        let s = sweep(seed, trials)?;
        if as_json {
            print_json(&with_meta(config, serde_json::to_value(&s).map_err(anyhow::Error::from)?));
        } else {
            print!("{}", header(config));
            println!(
                "trials: {}  passes: {}  violations: {}  jensen failures: {}  vacuous: {}",
                s.trials, s.passes, s.violations, s.jensen_failures, s.vacuous
            );
        }
        return Ok(s.violations == 0 && s.jensen_failures == 0);
    }
    let (k, phi, n) = match (k, phi, n) {
        (Some(k), Some(phi), Some(n)) => (k, phi, n),
        _ => return Err(Failure::Input(anyhow::anyhow!("--K, --phi and --n are required"))),
    };
    let field = field_spec(k)?.build(n)?;
    let map = function_spec(phi)?.build()?;
    let p = p.unwrap_or((n - 1) as f64);
    let rec = verify_lemma31(&field, &map, p)?;
    if as_json {
        print_json(&with_meta(config, json!({ "record": rec })));
    } else {
        print!("{}", header(config));
        println!("lhs  = {}  ({})", fmt_num(rec.lhs), rec.lhs_verdict);
        println!("rhs  = {}  ({})", fmt_num(rec.rhs), rec.rhs_verdict);
        println!("M    = {}  ({})", fmt_num(rec.m), rec.m_verdict);
        println!("pass = {}", rec.pass);
        for note in &rec.notes {
            println!("note: {note}");
        }
    }
    Ok(rec.pass)
}

fn build_extremal(config: &Value, phi: &str, n: usize, grid: usize, rmin: f64, out: Option<&Path>) -> Outcome {
    let map_phi = function_spec(phi)?.build()?;
    let map = ExtremalMap::build(&map_phi, n, grid, rmin)?;
    let checks = map.profile.check();
    let energy = map.phi_energy()?;
    if let Some(path) = out {
        let p = &map.profile;
        let mut csv = header(config);
        csv.push_str("r,K,I,rho,phi_of_K\n");
        for ((r, k), i) in p.r_grid.iter().zip(&p.k_values).zip(&p.i_table) {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                csv_number(*r),
                csv_number(*k),
                csv_number(*i),
                csv_number(i.exp()),
                csv_number(p.phi.eval(*k))
            );
        }
        std::fs::write(path, csv)
            .with_context(|| format!("writing `{}`", path.display()))?;
    }
    print_json(&with_meta(
        config,
        json!({
            "gamma": map.profile.gamma,
            "R": map.big_r,
            "energy": energy.energy,
            "bound": energy.bound,
            "checks": checks,
        }),
    ));
    Ok(checks.all_ok() && energy.within_bound)
}

fn norm_profile(config: &Value, q: &str, n: usize, delta: f64, points: usize, out: Option<&Path>, as_json: bool) -> Outcome {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QlabError::spec("delta", format!("must lie in (0, 1), got {delta}")).into());
    }
    if points < 2 {
        return Err(QlabError::spec("points", "need at least two radii").into());
    }
    let field = field_spec(q)?.build(n)?;
    let radii = radii_log_spaced(delta * 1e-6, delta, points);
    let profile = spherical_norm_profile(&field, &radii)?;
    let report = norm_divergence(&field, delta)?;
    if as_json {
        print_json(&with_meta(config, json!({ "profile": profile, "divergence": report })));
        return Ok(true);
    }
    let mut csv = header(config);
    csv.push_str("r,norm\n");
    for (r, v) in profile.radii.iter().zip(&profile.values) {
        let _ = writeln!(csv, "{},{}", csv_number(*r), csv_number(*v));
    }
    let verdict = format!("verdict: {} ({})", report.verdict, report.note);
    match out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing `{}`", path.display()))?;
            println!("{verdict}");
        }
        None => {
            print!("{csv}");
            println!("# {verdict}");
        }
    }
    Ok(true)
}

fn ring(config: &Value, r: f64, big_r: f64, n: usize, as_json: bool) -> Outcome {
    let m = ring_modulus(r, big_r, n)?;
    if as_json {
        print_json(&with_meta(config, json!({ "modulus": m })));
    } else {
        println!("{}", csv_number(m));
    }
    Ok(true)
}

fn suite(config: &Value, seed: u64, as_json: bool) -> Outcome {
    let report = run_suite(seed);
    if as_json {
        print_json(&with_meta(config, serde_json::to_value(&report).map_err(anyhow::Error::from)?));
    } else {
        print!("{}", header(config));
        for c in &report.criteria {
            println!("[{}] {:>2} {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name);
        }
        println!("{}/{} criteria passed", report.passed, report.total);
    }
    Ok(report.all_passed())
}

fn run(cli: Cli) -> Outcome {
    let config = serde_json::to_value(&cli.command).map_err(anyhow::Error::from)?;
    match &cli.command {
        Command::CheckPhi { phi, n, p, kmax, json } => check_phi(&config, phi, *n, *p, *kmax, *json),
        Command::VerifyLemma31 {
            k,
            phi,
            p,
            n,
            sweep,
            seed,
            trials,
            json,
        } => verify(&config, k.as_deref(), phi.as_deref(), *p, *n, *sweep, *seed, *trials, *json),
        Command::BuildExtremal {
            phi,
            n,
            grid,
            rmin,
            out,
        } => build_extremal(&config, phi, *n, *grid, *rmin, out.as_deref()),
        Command::NormProfile {
            q,
            n,
            delta,
            points,
            out,
            json,
        } => norm_profile(&config, q, *n, *delta, *points, out.as_deref(), *json),
        Command::RingModulus { r, big_r, n, json } => ring(&config, *r, *big_r, *n, *json),
        Command::Suite { seed, json } => suite(&config, *seed, *json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
