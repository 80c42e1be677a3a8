//! `framesolve`: optimal duals, optimal perturbations, verification sweeps
//! and random frames, with JSON in and out.
//!
//! Exit codes: 0 success, 1 I/O, parse or other errors, 2 infeasible
//! restriction, 3 violations found by `verify`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use framesolve_core::dualopt::{self, DualRestriction};
use framesolve_core::frames::{apply_operator, frame_operator, random_frame};
use framesolve_core::perturbopt::{self, PerturbRestriction};
use framesolve_core::random::seeded;
use framesolve_core::verify::{self, Suite, SweepConfig};
use framesolve_core::{Error, Frame};
use serde::Serialize;
use serde_json::{json, Value};

const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_VERIFY_TOL: f64 = 1e-8;
const DEFAULT_LOG_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "framesolve", version, about = "Optimal restricted duals and near-unitary perturbations of finite frames")]
struct Cli {
    /// Absolute/relative tolerance for certificates and additive checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Tolerance on sums of logarithms.
    #[arg(long, global = true)]
    log_tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave `wall_time_ms` out of the report.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal dual under a norm floor `t` and a distance radius `eps`.
    Dualopt {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Optimal perturbation with `‖V*V − I‖ ≤ delta` and `det(V*V) ≥ s`.
    Perturbopt {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Optimal expansive perturbation with `det(V*V) = s > 1`.
    Expansive {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        s: f64,
    },
    /// Randomized property sweep.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 6)]
        dmax: usize,
        #[arg(long)]
        seed: u64,
        /// Competitors sampled per trial.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Random complex frame with standard normal entries.
    Gen {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct Tolerances {
    tol: f64,
    log_tol: f64,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    inputs: Value,
    outputs: Value,
    seed: Option<u64>,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<u64>,
}

enum Failure {
    Infeasible(String),
    Violations(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn other(msg: impl Into<String>) -> Failure {
    Failure::Other(msg.into())
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| other(format!("serialization failed: {e}")))
}

fn read_frame(path: &Path) -> Result<Frame, Failure> {
    let text = fs::read_to_string(path).map_err(|e| other(format!("cannot read {}: {e}", path.display())))?;
    Ok(Frame::from_json(&text)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| other(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.write_all(b"\n")) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(other(format!("cannot write to stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let log_tol = cli.log_tol.unwrap_or(DEFAULT_LOG_TOL);
    let tol = cli.tol.unwrap_or(match cli.command {
        Command::Verify { .. } => DEFAULT_VERIFY_TOL,
        _ => DEFAULT_TOL,
    });
    if !(tol >= 0.0 && log_tol >= 0.0) {
        return Err(other("tolerances must be nonnegative"));
    }
    let mut violation = None;
    let (command, inputs, outputs, seed) = match &cli.command {
        Command::Gen { d, n, seed } => {
            if *d == 0 || n < d {
                return Err(other(format!("need n ≥ d ≥ 1, got d = {d}, n = {n}")));
            }
            let f = random_frame(*d, *n, &mut seeded(*seed))?;
            return emit(&f.to_json(), cli.out.as_deref());
        }
        Command::Dualopt { frame, t, eps } => {
            let f = read_frame(frame)?;
            let r = DualRestriction::new(*t, *eps)?;
            let res = dualopt::construct_optimal_dual(&f, &r)?;
            let cert = dualopt::certify_optimal_dual(&f, &res.dual, &r, tol)?;
            if !cert.optimal {
                return Err(other(format!("constructed dual failed its certificate: {cert:?}")));
            }
            let inputs = json!({ "frame": frame, "d": f.d(), "n": f.n(), "t": t, "eps": eps });
            let outputs = json!({
                "dual": to_value(&res.dual)?,
                "lambda": to_value(&res.lambda)?,
                "rho": to_value(&res.rho)?,
                "m": res.m,
                "t0": res.t0,
                "bump": to_value(&res.bump)?,
                "lower_bounds": to_value(&res.lower_bounds)?,
                "certificate": to_value(&cert)?,
            });
            ("dualopt", inputs, outputs, None)
        }
        Command::Perturbopt { frame, s, delta } => {
            let f = read_frame(frame)?;
            let r = PerturbRestriction::new(*s, *delta)?;
            let sf = frame_operator(&f);
            let res = perturbopt::construct_optimal_v(&sf, &r)?;
            let cert = perturbopt::certify_optimal_perturb(&sf, &res.v0, &r, tol)?;
            if !cert.optimal {
                return Err(other(format!("constructed perturbation failed its certificate: {cert:?}")));
            }
            let inputs = json!({ "frame": frame, "d": f.d(), "n": f.n(), "s": s, "delta": delta });
            let outputs = json!({
                "v0": to_value(&res.v0)?,
                "mu": to_value(&res.mu)?,
                "lambda": to_value(&res.lambda)?,
                "log_data": to_value(&res.log_data)?,
                "perturbed_frame": to_value(&apply_operator(&res.v0, &f)?)?,
                "lower_bounds": to_value(&res.lower_bounds)?,
                "certificate": to_value(&cert)?,
            });
            ("perturbopt", inputs, outputs, None)
        }
        Command::Expansive { frame, s } => {
            let f = read_frame(frame)?;
            if !(*s > 1.0) {
                return Err(Failure::Infeasible(format!("infeasible: expansive perturbations need s > 1, got s = {s}")));
            }
            let sf = frame_operator(&f);
            let res = perturbopt::construct_expansive_v(&sf, *s)?;
            let cert = perturbopt::certify_expansive(&sf, &res.v0, *s, tol)?;
            if !(cert.equality && cert.structure && cert.log_dominance) {
                return Err(other(format!("constructed perturbation failed its certificate: {cert:?}")));
            }
            let inputs = json!({ "frame": frame, "d": f.d(), "n": f.n(), "s": s });
            let outputs = json!({
                "v0": to_value(&res.v0)?,
                "mu": to_value(&res.mu)?,
                "lambda": to_value(&res.lambda)?,
                "nu_log": to_value(&res.nu_log)?,
                "t_log": res.t_log,
                "perturbed_frame": to_value(&apply_operator(&res.v0, &f)?)?,
                "lower_bounds": to_value(&res.lower_bounds)?,
                "certificate": to_value(&cert)?,
            });
            ("expansive", inputs, outputs, None)
        }
        Command::Verify { suite, trials, dmax, seed, samples } => {
            let cfg = SweepConfig { trials: *trials, dmax: *dmax, seed: *seed, tol, log_tol, samples: *samples };
            let rep = verify::run_suite(*suite, &cfg)?;
            if !rep.passed() {
                violation = Some(format!("{} violation(s) in suite {suite}", rep.violations));
            }
            let inputs = json!({ "suite": suite, "trials": trials, "dmax": dmax, "samples": samples });
            ("verify", inputs, to_value(&rep)?, Some(*seed))
        }
    };
    let report = RunReport {
        command,
        inputs,
        outputs,
        seed,
        tolerances: Tolerances { tol, log_tol },
        wall_time_ms: (!cli.no_timing).then(|| start.elapsed().as_millis() as u64),
    };
    let text = serde_json::to_string(&report).map_err(|e| other(format!("serialization failed: {e}")))?;
    emit(&text, cli.out.as_deref())?;
    match violation {
        Some(msg) => Err(Failure::Violations(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violations(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
