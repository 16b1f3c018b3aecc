use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use torus_riesz::optimizer::OptimOptions;
use torus_riesz::KernelSpec;

use crate::Failure;

#[derive(Parser, Debug)]
#[command(name = "torus-riesz", version, about = "Point configurations on the flat torus: energies and spectral regularity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a point set (grid, random or jittered grid).
    Gen(GenArgs),
    /// Minimize a pair energy from several starts.
    Optimize(OptimizeArgs),
    /// Report on a stored point set.
    Analyze(AnalyzeArgs),
    /// Optimize and analyze over a list of sizes.
    Sweep(SweepArgs),
    /// Regenerate the frozen reference values.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    Grid,
    Random,
    Jitter,
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub d: usize,
    /// Number of points (random; or a perfect power for grid/jitter).
    #[arg(long)]
    pub n: Option<usize>,
    /// Points per axis (grid, jitter).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum per-coordinate displacement for jitter; default 0.1/m.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, default_value = "points.json")]
    pub out: PathBuf,
}

/// A number or `auto`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Auto,
    Value(f64),
}

impl FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Scale::Auto);
        }
        s.parse().map(Scale::Value).map_err(|_| format!("expected a number or `auto`, got {s:?}"))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Riesz,
    Gaussian,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kernel: Family,
    /// Riesz exponent, 0 < s < d.
    #[arg(long)]
    pub s: Option<f64>,
    /// Gaussian width; `auto` is N^(2/d).
    #[arg(long, default_value = "auto")]
    pub beta: Scale,
    /// Ewald split parameter for riesz.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl KernelArgs {
    pub fn spec(&self, d: usize, n: usize) -> Result<KernelSpec, Failure> {
        let spec = match self.kernel {
            Family::Riesz => {
                let s = self
                    .s
                    .ok_or_else(|| Failure::Usage("--kernel riesz requires --s".into()))?;
                let spec = KernelSpec::riesz(d, s);
                match self.alpha {
                    Some(a) => spec.with_alpha(a),
                    None => spec,
                }
            }
            Family::Gaussian => {
                let beta = match self.beta {
                    Scale::Auto => (n as f64).powf(2.0 / d as f64),
                    Scale::Value(b) => b,
                };
                KernelSpec::gaussian(d, beta)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub initial_step: Option<f64>,
}

impl OptimArgs {
    pub fn options(&self) -> Result<OptimOptions, Failure> {
        let base = OptimOptions::default();
        let opts = OptimOptions {
            restarts: self.restarts,
            seed: self.seed,
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            grad_tol: self.grad_tol.unwrap_or(base.grad_tol),
            initial_step: self.initial_step.unwrap_or(base.initial_step),
            ..base
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Result file (JSON).
    #[arg(long, default_value = "optimize.json")]
    pub out: PathBuf,
    /// Final point set; default `<out stem>.points.json`.
    #[arg(long)]
    pub points: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyzeKind {
    Spectral,
    Montgomery,
    Quadrature,
    Heat,
    Box,
    Theorem1,
    Lemma1,
    Selfscale,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub kind: AnalyzeKind,
    /// Point-set JSON (not needed for selfscale when --d is given).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Frequency cutoff X.
    #[arg(long, visible_alias = "xmax")]
    pub x: Option<f64>,
    /// Heat time(s): a number, a comma list, or `auto` (N^(-2/d)).
    #[arg(long)]
    pub t: Option<String>,
    /// Box side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<f64>,
    /// Box-discrepancy frequency truncation.
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    /// Riesz exponent for theorem1, lemma1 and selfscale.
    #[arg(long)]
    pub s: Option<f64>,
    /// Dimension for selfscale without an input file.
    #[arg(long)]
    pub d: Option<usize>,
    /// Exit 3 when an exact check fails.
    #[arg(long)]
    pub assert: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    CrossEnergy,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long)]
    pub d: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Second riesz exponent for the cross-energy experiment.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value = "sweep.json")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}
