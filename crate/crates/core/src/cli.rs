//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed verification or I/O error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bsv::{BsvSpec, Weighting};
use crate::error::Error;
use crate::fock::DEFAULT_CUTOFF;
use crate::loss::Efficiency;
use crate::mub::{build_mub, certify, require_prime};
use crate::par::{map_slice, with_threads, Parallelism};
use crate::verify::{render_table, run_verification, VerifyOptions};
use crate::witness::{criterion_with, critical_eta_with, BisectionOptions, CriterionKind, WitnessReport};

#[derive(Debug, Parser)]
#[command(
    name = "multiport-witness",
    version,
    about = "Entanglement witnesses for bright squeezed vacuum behind multiport interferometers"
)]
pub struct Cli {
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Export the p+1 unbiased multiport unitaries as JSON.
    Mub {
        #[arg(long)]
        p: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Evaluate one criterion at a single (Γ, η) point.
    Witness {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
    },
    /// Evaluate a criterion on a Γ × η grid.
    Sweep {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        gamma: GammaRange,
        #[arg(long, default_value_t = 0.0)]
        eta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 11)]
        eta_steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Bisect for the critical efficiency at each Γ.
    CriticalEta {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        gamma: GammaRange,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the built-in numerical self-checks.
    Verify {
        /// Random states for the R_m bound check.
        #[arg(long, default_value_t = 10_000)]
        bound_samples: usize,
        /// Random states for sampler and complementarity checks.
        #[arg(long, default_value_t = 1_000)]
        samples: usize,
        #[arg(long, default_value_t = 2016)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long, value_enum, default_value_t = CriterionKind::RateD3)]
    pub criterion: CriterionKind,
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: usize,
    /// state-norm | literal-appendix-c
    #[arg(long, default_value_t = Weighting::StateNorm)]
    pub weighting: Weighting,
    /// Condition on at least one photon pair; defaults to true for rate criteria.
    #[arg(long)]
    pub renormalized: Option<bool>,
}

impl StateArgs {
    fn spec(&self, gamma: f64) -> Result<BsvSpec, Error> {
        require_prime(self.p)?;
        self.criterion.check_modes(self.p)?;
        let spec = BsvSpec::new(self.p, gamma)?
            .with_cutoff(self.cutoff)
            .with_weighting(self.weighting)
            .renormalized(self.renormalized.unwrap_or(self.criterion.default_renormalized()));
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct GammaRange {
    #[arg(long, default_value_t = 0.1)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 10)]
    pub gamma_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// `steps` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, Error> {
    if steps == 0 || !min.is_finite() || !max.is_finite() || min > max {
        return Err(Error::InvalidParameter(format!("empty range [{min}, {max}] with {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { max } else { min + h * i as f64 }).collect())
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = json!(round12(x));
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serializable");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn cmd_mub(p: usize, output: Option<&PathBuf>) -> Result<(), Failure> {
    require_prime(p)?;
    let set = build_mub(p)?;
    let cert = certify(&set);
    let matrices: Vec<Value> = set
        .iter()
        .map(|u| {
            let m = u.matrix();
            let rows: Vec<Vec<[f64; 2]>> =
                (0..p).map(|r| (0..p).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect();
            json!({ "setting": u.setting(), "matrix": rows })
        })
        .collect();
    let doc = json!({
        "p": p,
        "matrices": matrices,
        "certification": {
            "max_unitarity_dev": cert.max_unitarity_dev,
            "max_overlap_dev": cert.max_overlap_dev,
            "max_det_modulus_dev": cert.max_det_modulus_dev,
            "tolerance": 1e-12,
            "passed": cert.passes(1e-12),
        },
    });
    emit(&to_json(&doc), output)
}

fn cmd_witness(state: &StateArgs, gamma: f64, eta: f64, mode: Parallelism) -> Result<(), Failure> {
    let spec = state.spec(gamma)?;
    let report = criterion_with(state.criterion, &spec, Efficiency::new(eta)?, mode)?;
    emit(&to_json(&report), None)
}

/// Evaluates the grid, Γ-major. Points run concurrently; each point is
/// evaluated sequentially so the numbers do not depend on the thread count.
pub fn sweep_reports(
    state: &StateArgs,
    gammas: &[f64],
    etas: &[f64],
    mode: Parallelism,
) -> Result<Vec<WitnessReport>, Error> {
    let mut points = Vec::with_capacity(gammas.len() * etas.len());
    for &g in gammas {
        let spec = state.spec(g)?;
        for &e in etas {
            points.push((spec, Efficiency::new(e)?));
        }
    }
    map_slice(&points, mode, |(spec, eta)| criterion_with(state.criterion, spec, *eta, Parallelism::Sequential))
        .into_iter()
        .collect()
}

pub fn sweep_csv(reports: &[WitnessReport]) -> String {
    let mut out = String::from("criterion,p,gamma,eta,cutoff,lhs,rhs,witness,entangled\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.criterion,
            r.p,
            fmt_num(r.gamma),
            fmt_num(r.eta),
            r.cutoff,
            fmt_opt(r.lhs),
            fmt_opt(r.rhs),
            fmt_opt(r.witness),
            r.entangled(),
        ));
    }
    out
}

#[derive(Serialize)]
struct CriticalEntry {
    gamma: f64,
    eta_critical: Option<f64>,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn cmd_critical_eta(
    state: &StateArgs,
    gamma: &GammaRange,
    tolerance: f64,
    output: Option<&PathBuf>,
    mode: Parallelism,
) -> Result<(), Failure> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Failure::Usage(format!("tolerance must be positive, got {tolerance}")));
    }
    let gammas = linspace(gamma.gamma_min, gamma.gamma_max, gamma.gamma_steps)?;
    let specs = gammas.iter().map(|&g| state.spec(g)).collect::<Result<Vec<_>, _>>()?;
    let opts = BisectionOptions { tolerance, parallelism: Parallelism::Sequential, ..Default::default() };
    let entries: Vec<CriticalEntry> = map_slice(&specs, mode, |spec| {
        let gamma = spec.gain.value();
        match critical_eta_with(state.criterion, spec, opts) {
            Ok(c) => CriticalEntry { gamma, eta_critical: Some(c.eta), iterations: c.iterations, reason: None },
            Err(e) => CriticalEntry { gamma, eta_critical: None, iterations: 0, reason: Some(e.to_string()) },
        }
    });
    emit(&to_json(&entries), output)
}

fn cmd_verify(bound_samples: usize, samples: usize, seed: u64, mode: Parallelism) -> Result<(), Failure> {
    let checks = run_verification(VerifyOptions { bound_samples, samples, seed, parallelism: mode });
    emit(&render_table(&checks), None)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let mode = if cli.threads == 1 { Parallelism::Sequential } else { Parallelism::Parallel };
    match &cli.command {
        Command::Mub { p, output } => cmd_mub(*p, output.as_ref()),
        Command::Witness { state, gamma, eta } => cmd_witness(state, *gamma, *eta, mode),
        Command::Sweep { state, gamma, eta_min, eta_max, eta_steps, format, output } => {
            let gammas = linspace(gamma.gamma_min, gamma.gamma_max, gamma.gamma_steps)?;
            let etas = linspace(*eta_min, *eta_max, *eta_steps)?;
            let reports = sweep_reports(state, &gammas, &etas, mode)?;
            let text = match format {
                Format::Csv => sweep_csv(&reports),
                Format::Json => to_json(&reports),
            };
            emit(&text, output.as_ref())
        }
        Command::CriticalEta { state, gamma, tolerance, output } => {
            cmd_critical_eta(state, gamma, *tolerance, output.as_ref(), mode)
        }
        Command::Verify { bound_samples, samples, seed } => cmd_verify(*bound_samples, *samples, *seed, mode),
    }
}

pub fn run(cli: Cli) -> ExitCode {
    match with_threads(cli.threads, || dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
    }
}
