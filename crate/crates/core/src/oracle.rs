//! Slow reference computations, each built on a different algorithm from the
//! production routine it is compared with.
//!
//! | oracle | checks | method |
//! |---|---|---|
//! | [`direct_image_riesz_difference`] | Ewald kernel | real-space image sum with a box-integral tail correction |
//! | [`grid_heat_discrepancy`] | [`crate::spectral::heat_discrepancy_l2`] | spatial heat kernel on a midpoint grid |
//! | [`brute_quadrature_error`] | [`crate::spectral::quadrature_worst_case`] | pointwise synthesis of `f` |
//! | [`random_expectation_spectral`] | random baseline `N·#{k}` | Monte Carlo over the pair Dirichlet sum |
//! | [`smoothed_interaction_quadrature`] | [`crate::kernels::smoothed_pair_interaction`] | 2-D grid quadrature of the double convolution |
//! | [`fourier_mode_quadrature`] | [`crate::kernels::fourier_coefficient`] | Richardson-corrected midpoint rule |
//! | [`spectral_energy`] | [`crate::energy::pair_energy`] | heat-regularized frequency sum, extrapolated to `t → 0` |
//! | [`box_discrepancy_translation_grid`] | [`crate::spectral::box_discrepancy_l2`] | counting points in translated boxes |

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelSpec, PeriodicKernel};
use crate::lattice::{for_each_in_cube, pairwise_sum, splitmix64};
use crate::torus::{gen_random, min_image_component, PointConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub image_radius: usize,
    pub grid_resolution: usize,
    pub mc_trials: usize,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            image_radius: 400,
            grid_resolution: 1024,
            mc_trials: 500,
            seed: 0,
        }
    }
}

impl OracleSettings {
    pub fn validate(&self) -> Result<()> {
        if self.image_radius < 1 {
            return invalid("image radius must be at least 1");
        }
        if self.grid_resolution < 2 {
            return invalid("grid resolution must be at least 2");
        }
        if self.mc_trials < 1 {
            return invalid("at least one Monte Carlo trial is required");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    /// `|D_R − D_{R/2}|`, an estimate of the remaining truncation error.
    pub tail_estimate: f64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = p1;
            dp = nf * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn composite_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + h / 2.0;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(mid + xi * h / 2.0) * h / 2.0;
        }
    }
    total
}

/// `∫_{[0,p]×[0,q]} ‖w‖^{-s} dw` in polar coordinates, split on the diagonal.
fn quadrant_integral(p: f64, q: f64, s: f64) -> f64 {
    let part = |a: f64, theta0: f64| {
        composite_gl(|th| (a / th.cos()).powf(2.0 - s) / (2.0 - s), 0.0, theta0, 8, 24)
    };
    let theta0 = (q / p).atan();
    part(p, theta0) + part(q, PI / 2.0 - theta0)
}

/// `∫_{Π[c_i − L, c_i + L]} ‖w‖^{-s} dw` for `|c_i| < L`, `d ∈ {1, 2}`.
fn box_integral(c: &[f64], half: f64, s: f64) -> f64 {
    match c.len() {
        1 => {
            let e = 1.0 - s;
            ((half - c[0]).powf(e) + (half + c[0]).powf(e)) / e
        }
        2 => {
            let mut total = 0.0;
            for p in [half - c[0], half + c[0]] {
                for q in [half - c[1], half + c[1]] {
                    total += quadrant_integral(p, q, s);
                }
            }
            total
        }
        _ => unreachable!(),
    }
}

fn image_difference(x: &[f64], y: &[f64], s: f64, radius: usize) -> Result<f64> {
    let d = x.len();
    let mut terms = Vec::with_capacity((2 * radius + 1).pow(d as u32));
    let mut singular = false;
    for_each_in_cube(d, radius as i64, |m| {
        let rx: f64 = x.iter().zip(m).map(|(a, &b)| (a + b as f64).powi(2)).sum();
        let ry: f64 = y.iter().zip(m).map(|(a, &b)| (a + b as f64).powi(2)).sum();
        if rx == 0.0 || ry == 0.0 {
            singular = true;
        }
        terms.push(rx.powf(-s / 2.0) - ry.powf(-s / 2.0));
    });
    if singular {
        return Err(Error::Singularity("image difference at a lattice point".into()));
    }
    let half = radius as f64 + 0.5;
    // Σ over the cube approximates ∫ over Q + x cell by cell; removing that
    // integral leaves the mean-zero periodic kernel.
    Ok(pairwise_sum(&terms) - box_integral(x, half, s) + box_integral(y, half, s))
}

/// `F(x) − F(y)` for the mean-zero periodic Riesz kernel `F`, from
/// `Σ_{‖m‖_∞ ≤ R} (‖x+m‖^{-s} − ‖y+m‖^{-s}) − ∫_{Q+x} ‖w‖^{-s} + ∫_{Q+y} ‖w‖^{-s}`
/// with `Q = [−R−1/2, R+1/2]^d`. The symmetric cube makes the remainder
/// `O(R^{d−s−4})`. Supports `d ∈ {1, 2}`.
pub fn direct_image_riesz_difference(x: &[f64], y: &[f64], s: f64, radius: usize) -> Result<OracleValue> {
    let d = x.len();
    if y.len() != d || !(1..=2).contains(&d) {
        return invalid("image-difference oracle supports d = 1 or 2 with matching points");
    }
    if !(s > 0.0 && s < d as f64) {
        return invalid(format!("s = {s} outside (0, {d})"));
    }
    if radius < 2 {
        return invalid("image radius must be at least 2");
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return invalid("non-finite coordinate");
    }
    let xr: Vec<f64> = x.iter().map(|&v| min_image_component(v)).collect();
    let yr: Vec<f64> = y.iter().map(|&v| min_image_component(v)).collect();
    if xr == yr {
        return Ok(OracleValue { value: 0.0, tail_estimate: 0.0 });
    }
    let full = image_difference(&xr, &yr, s, radius)?;
    let coarse = image_difference(&xr, &yr, s, radius / 2)?;
    Ok(OracleValue {
        value: full,
        tail_estimate: (full - coarse).abs(),
    })
}

/// `H_t(z) = Σ_k e^{-t‖k‖²} e^{2πi⟨k,z⟩} = (π/t)^{d/2} Σ_m e^{-π²‖z+m‖²/t}`, real-space form.
fn heat_kernel_real(z: &[f64], t: f64, reach: i64) -> f64 {
    let d = z.len();
    let mut total = 0.0;
    for_each_in_cube(d, reach, |m| {
        let r2: f64 = z.iter().zip(m).map(|(a, &b)| (min_image_component(*a) + b as f64).powi(2)).sum();
        total += (-PI * PI * r2 / t).exp();
    });
    (PI / t).powf(d as f64 / 2.0) * total
}

fn heat_reach(t: f64) -> i64 {
    // e^{-π² r²/t} < 1e-18 beyond r
    ((t * 41.5).sqrt() / PI + 0.5).ceil() as i64
}

/// Midpoint-grid average of `d_t(x)²`, `d_t(x) = Σ_n H_t(x_n − x) − N`, with the
/// heat kernel summed over spatial images.
pub fn grid_heat_discrepancy(config: &PointConfig, t: f64, m: usize) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return invalid(format!("heat time t = {t} must be positive"));
    }
    if m < 16 {
        return invalid("grid resolution must be at least 16");
    }
    let d = config.d();
    let cells = m
        .checked_pow(d as u32)
        .filter(|c| *c as f64 * config.n() as f64 <= 1e10)
        .ok_or_else(|| Error::Resource(format!("{m}^{d} grid too large")))?;
    let reach = heat_reach(t);
    let n = config.n() as f64;
    let squares: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; d];
            let mut rest = idx;
            for a in (0..d).rev() {
                x[a] = ((rest % m) as f64 + 0.5) / m as f64;
                rest /= m;
            }
            let mut z = vec![0.0; d];
            let mut field = Vec::with_capacity(config.n());
            for p in config.iter() {
                for a in 0..d {
                    z[a] = p[a] - x[a];
                }
                field.push(heat_kernel_real(&z, t, reach));
            }
            let dt = pairwise_sum(&field) - n;
            dt * dt
        })
        .collect();
    Ok(pairwise_sum(&squares) / cells as f64)
}

/// `|(1/N) Σ_n f(x_n) − f̂(0)|` for `f(x) = Σ_k f̂(k) e^{2πi⟨k,x⟩}`.
/// Coefficients must be Hermitian so that `f` is real.
pub fn brute_quadrature_error(config: &PointConfig, coeffs: &[(Vec<i64>, Complex64)]) -> Result<f64> {
    let d = config.d();
    let mut map: HashMap<&[i64], Complex64> = HashMap::new();
    for (k, c) in coeffs {
        if k.len() != d {
            return invalid("coefficient frequency has wrong dimension");
        }
        *map.entry(k.as_slice()).or_insert(Complex64::new(0.0, 0.0)) += c;
    }
    let scale = map.values().fold(0.0f64, |a, c| a.max(c.norm())).max(f64::MIN_POSITIVE);
    for (k, c) in &map {
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let partner = map.get(neg.as_slice()).copied().unwrap_or_default();
        if (partner - c.conj()).norm() > 1e-12 * scale {
            return invalid(format!("coefficients are not Hermitian at k = {k:?}"));
        }
    }
    let zero = vec![0i64; d];
    let mean_coef = map.get(zero.as_slice()).copied().unwrap_or_default().re;
    let values: Vec<f64> = config
        .iter()
        .map(|p| {
            let mut re = 0.0;
            for (k, c) in coeffs {
                let phase = 2.0 * PI * k.iter().zip(p).map(|(&a, b)| a as f64 * b).sum::<f64>();
                re += c.re * phase.cos() - c.im * phase.sin();
            }
            re
        })
        .collect();
    Ok((values.iter().sum::<f64>() / config.n() as f64 - mean_coef).abs())
}

/// Monte Carlo mean and standard error of `Σ_{0<‖k‖≤X} |S_k|²` over uniform
/// random configurations, computed as `Σ_{i,j} D_X(x_i − x_j)` with the ball
/// Dirichlet kernel `D_X(z) = Σ_{0<‖k‖≤X} cos(2π⟨k,z⟩)`.
pub fn random_expectation_spectral(d: usize, n: usize, x: f64, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if trials < 30 {
        return invalid("at least 30 trials are required");
    }
    if !(x.is_finite() && x >= 1.0) {
        return invalid(format!("cutoff X = {x} must be at least 1"));
    }
    let mut freqs: Vec<Vec<f64>> = Vec::new();
    for_each_in_cube(d, x.floor() as i64, |k| {
        let n2: i64 = k.iter().map(|v| v * v).sum();
        if n2 > 0 && n2 as f64 <= x * x {
            freqs.push(k.iter().map(|&v| v as f64).collect());
        }
    });
    let totals = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let c = gen_random(d, n, splitmix64(seed.wrapping_add(trial as u64)))?;
            let mut off = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in i + 1..n {
                    let (p, q) = (c.point(i), c.point(j));
                    let dk: f64 = freqs
                        .iter()
                        .map(|k| (2.0 * PI * k.iter().zip(p.iter().zip(q)).map(|(a, (u, v))| a * (u - v)).sum::<f64>()).cos())
                        .sum();
                    off.push(2.0 * dk);
                }
            }
            Ok((n * freqs.len()) as f64 + pairwise_sum(&off))
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = trials as f64;
    let mean = pairwise_sum(&totals) / k;
    let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok((mean, (var / k).sqrt()))
}

/// `∫∫ H_t(a − x) f(a − b) H_t(b − y) da db` on an `M × M` grid (`d = 1`), with
/// `f` the production Ewald kernel and `H_t` the spatial heat kernel. The `b`
/// grid is offset by `1/(4M)` so `a − b` never hits the singularity.
pub fn smoothed_interaction_quadrature(spec: &KernelSpec, delta: f64, t: f64, m: usize) -> Result<f64> {
    if spec.d != 1 {
        return invalid("double-convolution oracle is one-dimensional");
    }
    if !(t.is_finite() && t > 0.0) || m < 16 {
        return invalid("need t > 0 and M >= 16");
    }
    let kernel = PeriodicKernel::new(spec)?;
    let h = 1.0 / m as f64;
    let reach = heat_reach(t);
    let ha: Vec<f64> = (0..m).map(|i| heat_kernel_real(&[(i as f64 + 0.5) * h - delta], t, reach)).collect();
    let hb: Vec<f64> = (0..m).map(|j| heat_kernel_real(&[(j as f64 + 0.25) * h], t, reach)).collect();
    // f((i - j) h + h/4) depends on i - j mod M only
    let f: Vec<f64> = (0..m)
        .map(|r| kernel.value(&[(r as f64 + 0.25) * h]))
        .collect::<Result<_>>()?;
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let terms: Vec<f64> = (0..m).map(|j| f[(i + m - j) % m] * hb[j]).collect();
            ha[i] * pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows) * h * h)
}

/// `∫_{T^d} f(x) cos(2π⟨k,x⟩) dx` by the midpoint rule on `M^d` and `(2M)^d`
/// grids, Richardson-combined against the `h^{d−s}` error of the singularity.
pub fn fourier_mode_quadrature(spec: &KernelSpec, k: &[i64], m: usize) -> Result<f64> {
    let kernel = PeriodicKernel::new(spec)?;
    let d = spec.d;
    if k.len() != d {
        return invalid("frequency dimension does not match kernel");
    }
    let rule = |m: usize| -> Result<f64> {
        let cells = m.pow(d as u32);
        let vals = (0..cells)
            .into_par_iter()
            .map(|idx| {
                let mut x = vec![0.0; d];
                let mut rest = idx;
                for a in (0..d).rev() {
                    x[a] = ((rest % m) as f64 + 0.5) / m as f64;
                    rest /= m;
                }
                let ph = 2.0 * PI * x.iter().zip(k).map(|(a, &b)| a * b as f64).sum::<f64>();
                Ok(kernel.value(&x)? * ph.cos())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&vals) / cells as f64)
    };
    let coarse = rule(m)?;
    let fine = rule(2 * m)?;
    let r = 2f64.powf(d as f64 - spec.s());
    Ok((r * fine - coarse) / (r - 1.0))
}

/// `P(t) = Σ_{k≠0} f̂(k) e^{-2t‖k‖²} (|S_k|² − N)` with `S_k` by direct summation
/// over the full frequency cube, Richardson-extrapolated as `2P(t/2) − P(t)`.
pub fn spectral_energy(config: &PointConfig, spec: &KernelSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if config.d() != spec.d || !(t > 0.0) {
        return invalid("need matching dimension and t > 0");
    }
    let d = config.d();
    let n = config.n() as f64;
    // e^{-t k²} < 1e-18 beyond the cutoff
    let kmax = (41.5 / t).sqrt().ceil() as i64;
    if (2 * kmax + 1) as f64 * (d as f64) > 1e4 && d > 1 {
        return Err(Error::Resource("frequency cube too large for the energy oracle".into()));
    }
    let mut ks = Vec::new();
    for_each_in_cube(d, kmax, |k| {
        if k.iter().any(|&v| v != 0) {
            ks.push(k.to_vec());
        }
    });
    let parts: Vec<(f64, f64)> = ks
        .par_iter()
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for p in config.iter() {
                let ph = 2.0 * PI * k.iter().zip(p).map(|(&a, b)| a as f64 * b).sum::<f64>();
                re += ph.cos();
                im += ph.sin();
            }
            let n2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
            let w = crate::kernels::fourier_coefficient(spec, k) * (re * re + im * im - n);
            (w * (-2.0 * t * n2).exp(), w * (-t * n2).exp())
        })
        .collect();
    let (full, half): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
    Ok(2.0 * pairwise_sum(&half) - pairwise_sum(&full))
}

/// `∫ (#{n : x_n ∈ z + Π[0,a_i)} − N Π a_i)² dz` by the midpoint rule over
/// `M^d` translations `z`.
pub fn box_discrepancy_translation_grid(config: &PointConfig, a: &[f64], m: usize) -> Result<f64> {
    let d = config.d();
    if a.len() != d || a.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return invalid("box sides must match the dimension and lie in (0, 1)");
    }
    let cells = m.checked_pow(d as u32).ok_or_else(|| Error::Resource("grid too large".into()))?;
    let expected = config.n() as f64 * a.iter().product::<f64>();
    let squares: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let mut z = vec![0.0; d];
            let mut rest = idx;
            for ax in (0..d).rev() {
                z[ax] = ((rest % m) as f64 + 0.5) / m as f64;
                rest /= m;
            }
            let count = config
                .iter()
                .filter(|p| {
                    p.iter().zip(&z).zip(a).all(|((&x, &lo), &side)| {
                        let off = x - lo;
                        let off = off - off.floor();
                        off < side
                    })
                })
                .count() as f64;
            (count - expected).powi(2)
        })
        .collect();
    Ok(pairwise_sum(&squares) / cells as f64)
}
