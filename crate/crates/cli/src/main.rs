//! `torus-riesz`: generate, optimize and analyze point configurations on the torus.
//!
//! Exit codes: 0 success, 1 usage or malformed input, 2 numeric or convergence
//! failure, 3 violated check under `--assert`. `TORUS_THREADS` sets the worker
//! thread count.

mod analyze;
mod args;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;
use torus_riesz::optimizer::multi_start;
use torus_riesz::torus::{gen_grid, gen_perturbed_grid, gen_random, perfect_root};
use torus_riesz::{Error, PointConfig};

use args::{Cli, Command, GenArgs, GenKind, OptimizeArgs};
use output::{check_writable, write_atomic, Manifest};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
    Assertion(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Assertion(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Assertion(m) => write!(f, "assertion failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

pub fn read_config(path: &Path) -> Result<PointConfig, Failure> {
    PointConfig::read_json(path).map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))
}

pub fn to_pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TORUS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("TORUS_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    check_writable(&a.out)?;
    let size = |name: &str, v: Option<usize>| v.ok_or_else(|| Failure::Usage(format!("--kind {} needs --{name}", a.kind)));
    let side = || -> Result<usize, Failure> {
        match (a.m, a.n) {
            (Some(m), _) => Ok(m),
            (None, Some(n)) => perfect_root(n, a.d)
                .ok_or_else(|| Failure::Usage(format!("--n {n} is not a perfect {}-th power; pass --m", a.d))),
            (None, None) => size("m", None),
        }
    };
    let config = match a.kind {
        GenKind::Grid => gen_grid(a.d, side()?)?,
        GenKind::Random => gen_random(a.d, size("n", a.n)?, a.seed)?,
        GenKind::Jitter => {
            let m = side()?;
            gen_perturbed_grid(a.d, m, a.jitter.unwrap_or(0.1 / m as f64), a.seed)?
        }
    };
    write_atomic(&a.out, &config.to_json()?)?;
    println!("n={} d={} path={}", config.n(), config.d(), a.out.display());
    let mut m = Manifest::new("gen");
    m.seed = Some(a.seed);
    m.outputs.push(a.out.clone());
    m.summary = json!({"kind": a.kind.to_string(), "n": config.n(), "d": config.d()});
    m.emit()
}

fn points_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.points.json"))
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<(), Failure> {
    check_writable(&a.out)?;
    let points = a.points.clone().unwrap_or_else(|| points_path(&a.out));
    check_writable(&points)?;
    let spec = a.kernel.spec(a.d, a.n)?;
    let opts = a.optim.options()?;
    let result = multi_start(a.d, a.n, &spec, &opts)?;
    write_atomic(&a.out, &to_pretty(&result))?;
    write_atomic(&points, &result.config.to_json()?)?;
    let any_converged = result.restarts.iter().any(|r| r.converged);
    println!(
        "energy={:.12e} converged={} best_of={} grad_norm={:.3e} path={}",
        result.energy(),
        result.converged,
        result.best_of,
        result.grad_norm,
        a.out.display()
    );
    let mut m = Manifest::new("optimize");
    m.seed = Some(opts.seed);
    m.outputs = vec![a.out.clone(), points];
    m.summary = json!({
        "kernel": spec,
        "options": opts,
        "energy": result.energy(),
        "converged": result.converged,
        "any_restart_converged": any_converged,
    });
    m.emit()?;
    if any_converged {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("none of {} restarts converged", result.restarts.len())))
    }
}

fn cmd_fixtures(out: &Path) -> Result<(), Failure> {
    let written = torus_riesz::fixtures::write_all(out)?;
    for p in &written {
        println!("{}", p.display());
    }
    let mut m = Manifest::new("fixtures");
    m.outputs = written;
    m.summary = json!({"count": m.outputs.len()});
    m.emit()
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Fixtures { out } => cmd_fixtures(out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return ExitCode::from(if help { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("torus-riesz: {f}");
            ExitCode::from(f.code())
        }
    }
}
