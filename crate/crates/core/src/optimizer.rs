//! Gradient descent with Armijo backtracking, and a seeded multi-start driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::energy_and_gradient_with;
use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelSpec, PeriodicKernel};
use crate::lattice::splitmix64;
use crate::torus::{gen_perturbed_grid, gen_random, perfect_root, ConfigMeta, PointConfig};

const MAX_BACKTRACKS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Stop once `‖∇E‖ / N ≤ grad_tol`.
    pub grad_tol: f64,
    /// Trial step before the first Barzilai-Borwein estimate is available.
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-6,
            initial_step: 1e-3,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            seed: 0,
            restarts: 1,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return invalid(format!("grad_tol {} must be positive", self.grad_tol));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return invalid(format!("initial_step {} must be positive", self.initial_step));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return invalid(format!("backtrack_factor {} outside (0,1)", self.backtrack_factor));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return invalid(format!("armijo_c {} outside (0,1)", self.armijo_c));
        }
        if self.restarts == 0 {
            return invalid("restarts must be at least 1");
        }
        Ok(())
    }
}

/// Outcome of one restart inside [`multi_start`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub start: String,
    pub energy: Option<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub config: PointConfig,
    /// `(iteration, pair_energy)` for the start and every accepted step.
    pub energy_trace: Vec<(usize, f64)>,
    pub accepted_steps: usize,
    pub converged: bool,
    pub best_of: usize,
    pub grad_norm: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub restarts: Vec<RestartSummary>,
}

impl OptimResult {
    pub fn energy(&self) -> f64 {
        self.energy_trace.last().map_or(f64::NAN, |&(_, e)| e)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest per-point displacement of the step `-alpha * g`.
fn max_point_move(g: &[f64], d: usize, alpha: f64) -> f64 {
    g.chunks_exact(d).map(norm).fold(0.0, f64::max) * alpha
}

/// Local minimization from `config0`.
///
/// Trial steps move along `-∇E`; the trial length is the Barzilai-Borwein
/// estimate of the previous step (or `initial_step`), clipped so that no
/// point moves farther than `0.25 / N^{1/d}`, then shrunk by
/// `backtrack_factor` until the Armijo condition holds with a strict decrease.
/// A trial point where the kernel is singular counts as a rejected trial.
pub fn minimize(config0: &PointConfig, spec: &KernelSpec, opts: &OptimOptions) -> Result<OptimResult> {
    opts.validate()?;
    let kernel = PeriodicKernel::new(spec)?;
    minimize_with(config0, &kernel, opts)
}

pub fn minimize_with(
    config0: &PointConfig,
    kernel: &PeriodicKernel,
    opts: &OptimOptions,
) -> Result<OptimResult> {
    opts.validate()?;
    let d = config0.d();
    let n = config0.n() as f64;
    let max_move = 0.25 / n.powf(1.0 / d as f64);

    let mut x = config0.clone();
    let (mut energy, mut grad) = energy_and_gradient_with(&x, kernel)?;
    let mut trace = vec![(0usize, energy)];
    let mut accepted = 0usize;
    let mut converged = false;
    let mut bb_step: Option<f64> = None;

    for iter in 1..=opts.max_iters {
        let gnorm = norm(&grad);
        if gnorm / n <= opts.grad_tol {
            converged = true;
            break;
        }
        let mut alpha = bb_step.unwrap_or(opts.initial_step);
        let peak = max_point_move(&grad, d, alpha);
        if peak > max_move {
            alpha *= max_move / peak;
        }
        let g2 = gnorm * gnorm;
        let mut step = None;
        for _ in 0..=MAX_BACKTRACKS {
            let coords: Vec<f64> = x
                .coords()
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - alpha * g)
                .collect();
            let trial = PointConfig::from_unwrapped(d, coords, x.meta.clone())?;
            match energy_and_gradient_with(&trial, kernel) {
                Ok((e, g)) if e < energy && e <= energy - opts.armijo_c * alpha * g2 => {
                    step = Some((trial, e, g, alpha));
                    break;
                }
                Ok(_) | Err(Error::CoincidentPoints { .. }) | Err(Error::Singularity(_)) => {
                    alpha *= opts.backtrack_factor;
                }
                Err(other) => return Err(other),
            }
        }
        let Some((trial, e, g, a)) = step else {
            break;
        };
        // s = -a·grad, y = g - grad
        let y: Vec<f64> = g.iter().zip(&grad).map(|(p, q)| p - q).collect();
        let sy = -a * dot(&grad, &y);
        bb_step = (sy > 0.0).then(|| a * a * g2 / sy);
        x = trial;
        energy = e;
        grad = g;
        accepted += 1;
        trace.push((iter, energy));
    }
    if !converged && norm(&grad) / n <= opts.grad_tol {
        converged = true;
    }
    Ok(OptimResult {
        config: x,
        energy_trace: trace,
        accepted_steps: accepted,
        converged,
        best_of: 0,
        grad_norm: norm(&grad),
        restarts: Vec::new(),
    })
}

/// Starting configuration for restart `index`: restart 0 is
/// `gen_random(d, n, seed)`; odd restarts use a jittered grid when `n = m^d`;
/// the rest are random with a seed derived from `(seed, index)`.
pub fn restart_start(d: usize, n: usize, seed: u64, index: usize) -> Result<PointConfig> {
    if index == 0 {
        return gen_random(d, n, seed);
    }
    let derived = splitmix64(seed ^ splitmix64(index as u64));
    match perfect_root(n, d) {
        Some(m) if index % 2 == 1 => gen_perturbed_grid(d, m, 0.1 / m as f64, derived),
        _ => gen_random(d, n, derived),
    }
}

/// Runs `opts.restarts` seeded minimizations and returns the lowest-energy one
/// (ties broken by restart index). Restarts that error are recorded and skipped.
pub fn multi_start(d: usize, n: usize, spec: &KernelSpec, opts: &OptimOptions) -> Result<OptimResult> {
    opts.validate()?;
    if spec.d != d {
        return invalid(format!("kernel dimension {} does not match d = {d}", spec.d));
    }
    let kernel = PeriodicKernel::new(spec)?;
    let runs: Vec<(String, Result<OptimResult>)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| match restart_start(d, n, opts.seed, r) {
            Ok(start) => (start.meta.generator.clone(), minimize_with(&start, &kernel, opts)),
            Err(e) => ("none".into(), Err(e)),
        })
        .collect();

    let summaries: Vec<RestartSummary> = runs
        .iter()
        .enumerate()
        .map(|(index, (start, r))| match r {
            Ok(res) => RestartSummary {
                index,
                start: start.clone(),
                energy: Some(res.energy()),
                converged: res.converged,
                error: None,
            },
            Err(e) => RestartSummary {
                index,
                start: start.clone(),
                energy: None,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut best: Option<(usize, OptimResult)> = None;
    for (index, (_, r)) in runs.into_iter().enumerate() {
        let Ok(res) = r else { continue };
        if best.as_ref().is_none_or(|(_, b)| res.energy() < b.energy()) {
            best = Some((index, res));
        }
    }
    let (index, mut res) = best.ok_or_else(|| {
        Error::Degenerate(format!("all {} restarts failed", opts.restarts))
    })?;
    res.best_of = index;
    res.restarts = summaries;
    res.config.meta = ConfigMeta {
        generator: format!("multi_start[{}]", res.config.meta.generator),
        seed: Some(opts.seed),
        trace_id: Some(format!("restart-{index}")),
    };
    Ok(res)
}
