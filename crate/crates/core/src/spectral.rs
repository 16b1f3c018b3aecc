//! Exponential sums `S_k = Σ_n e^{2πi⟨k,x_n⟩}` and the regularity measures built
//! from them.
//!
//! Sums over frequency sets symmetric under `k ↦ -k` visit one representative
//! per pair and double it, since `S_{-k} = conj(S_k)`. Frequencies are grouped
//! into exact shells by the integer `‖k‖²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_defect, log_log_slope};
use crate::error::{invalid, Error, Result};
use crate::kernels::{smoothed_pair_interaction, KernelFamily, KernelSpec};
use crate::lattice::{cutoff_radius, for_each_half_ball, for_each_in_cube, is_positive_half, pairwise_sum, unit_ball_volume};
use crate::torus::{perfect_root, PointConfig};

/// Upper limit on `#frequencies × N` for a single enumeration.
const MAX_WORK: f64 = 4e10;
/// Heat-discrepancy truncation: tail below this fraction of `N²`.
const HEAT_TAIL_REL: f64 = 1e-14;

/// `e^{2πi⟨k,x_n⟩}` summed over the configuration.
pub fn exp_sum(config: &PointConfig, k: &[i64]) -> Result<Complex64> {
    if k.len() != config.d() {
        return invalid(format!(
            "frequency has {} components, configuration dimension is {}",
            k.len(),
            config.d()
        ));
    }
    Ok(exp_sum_unchecked(config, k))
}

fn exp_sum_unchecked(config: &PointConfig, k: &[i64]) -> Complex64 {
    let mut re = Vec::with_capacity(config.n());
    let mut im = Vec::with_capacity(config.n());
    for p in config.iter() {
        let phase: f64 = k.iter().zip(p).map(|(&a, &b)| (a as f64 * b).fract()).sum();
        let (s, c) = (2.0 * PI * phase.fract()).sin_cos();
        re.push(c);
        im.push(s);
    }
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub norm_sq: i64,
    /// Number of frequencies `k` (both signs) with this `‖k‖²`.
    pub count: usize,
    pub sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub x_cut: f64,
    pub n: usize,
    pub d: usize,
    pub shells: Vec<Shell>,
    pub total: f64,
}

pub const PROFILE_CSV_HEADER: &str = "k_norm_sq,count,shell_sum,cumulative";

impl SpectralProfile {
    pub fn frequency_count(&self) -> usize {
        self.shells.iter().map(|s| s.count).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(PROFILE_CSV_HEADER);
        out.push('\n');
        let mut cumulative = 0.0;
        for s in &self.shells {
            cumulative += s.sum;
            out.push_str(&format!("{},{},{:e},{:e}\n", s.norm_sq, s.count, s.sum, cumulative));
        }
        out
    }
}

fn check_work(d: usize, n: usize, radius: f64) -> Result<()> {
    let count = unit_ball_volume(d) * (radius + (d as f64).sqrt()).powi(d as i32);
    if !count.is_finite() || count * n as f64 > MAX_WORK {
        return Err(Error::Resource(format!(
            "about {count:.2e} frequencies × {n} points exceeds the enumeration budget"
        )));
    }
    Ok(())
}

/// Half-space representatives with `0 < ‖k‖ ≤ radius`, grouped by `‖k‖²`.
fn half_ball_shells(d: usize, radius: f64) -> BTreeMap<i64, Vec<Vec<i64>>> {
    let mut shells: BTreeMap<i64, Vec<Vec<i64>>> = BTreeMap::new();
    for_each_half_ball(d, radius * radius, |k, n2| {
        shells.entry(n2).or_default().push(k.to_vec());
    });
    shells
}

/// `Σ_{0<‖k‖≤X} |S_k|²` over the Euclidean ball, with its shell decomposition.
pub fn spectral_sum(config: &PointConfig, x: f64) -> Result<SpectralProfile> {
    if !(x.is_finite() && x >= 1.0) {
        return invalid(format!("cutoff X = {x} must be at least 1"));
    }
    check_work(config.d(), config.n(), x)?;
    let groups: Vec<(i64, Vec<Vec<i64>>)> = half_ball_shells(config.d(), x).into_iter().collect();
    let shells: Vec<Shell> = groups
        .par_iter()
        .map(|(n2, ks)| {
            let terms: Vec<f64> = ks.iter().map(|k| exp_sum_unchecked(config, k).norm_sqr()).collect();
            Shell {
                norm_sq: *n2,
                count: 2 * ks.len(),
                sum: 2.0 * pairwise_sum(&terms),
            }
        })
        .collect();
    let sums: Vec<f64> = shells.iter().map(|s| s.sum).collect();
    Ok(SpectralProfile {
        x_cut: x,
        n: config.n(),
        d: config.d(),
        total: pairwise_sum(&sums),
        shells,
    })
}

/// `spectral_sum(X).total − (N X^d − N²)`, non-negative for every integer `X ≥ 1`.
pub fn montgomery_margin(config: &PointConfig, x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 1.0 && x.fract() == 0.0) {
        return invalid(format!("Montgomery cutoff X = {x} must be a positive integer"));
    }
    let total = spectral_sum(config, x)?.total;
    let n = config.n() as f64;
    Ok(total - (n * x.powi(config.d() as i32) - n * n))
}

/// Worst-case error `(1/N) (Σ_{0<‖k‖≤X} |S_k|²)^{1/2}` of equal-weight quadrature
/// over real functions with `‖f‖_{L²} = 1` and spectrum in the ball of radius `X`.
pub fn quadrature_worst_case(config: &PointConfig, x: f64) -> Result<f64> {
    Ok(spectral_sum(config, x)?.total.sqrt() / config.n() as f64)
}

/// Coefficients `f̂(k) = conj(S_k) / ‖S‖` on `0 < ‖k‖ ≤ X` (both signs listed):
/// the unit-norm band-limited function that attains the quadrature worst case.
pub fn extremal_band_limited(config: &PointConfig, x: f64) -> Result<Vec<(Vec<i64>, Complex64)>> {
    let total = spectral_sum(config, x)?.total;
    let n = config.n() as f64;
    if total <= 1e-20 * n * n {
        return Err(Error::Degenerate(format!(
            "spectral sum {total:e} vanishes; no extremal direction"
        )));
    }
    let norm = total.sqrt();
    let mut out = Vec::new();
    for (_, ks) in half_ball_shells(config.d(), x) {
        for k in ks {
            let c = exp_sum_unchecked(config, &k).conj() / norm;
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            out.push((k, c));
            out.push((neg, c.conj()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatDiscrepancyReport {
    pub t: f64,
    pub n: usize,
    pub d: usize,
    /// `∫ d_t² = Σ_{k≠0} e^{-2t‖k‖²} |S_k|²`.
    pub value: f64,
    /// Lower bound for `value / N²` at `t = N^{-2/d}`, see [`heat_floor`].
    pub lower_bound_ref: f64,
    pub truncation_k: f64,
    pub tail_bound: f64,
}

/// Squared `L²` norm of the heat-smoothed discrepancy
/// `d_t(x) = Σ_n [e^{tΔ}δ_x](x_n) − N`.
pub fn heat_discrepancy_l2(config: &PointConfig, t: f64) -> Result<HeatDiscrepancyReport> {
    if !(t.is_finite() && t > 0.0) {
        return invalid(format!("heat time t = {t} must be positive"));
    }
    let d = config.d();
    let n = config.n() as f64;
    let tol = HEAT_TAIL_REL * n * n;
    let h = |r: f64| n * n * (-2.0 * t * r * r).exp();
    let k_cut = cutoff_radius(d, 1.0, tol, h).max(1.0);
    let tail_bound = crate::lattice::lattice_tail_bound(d, k_cut, h);
    let profile = spectral_sum(config, k_cut)?;
    let weighted: Vec<f64> = profile
        .shells
        .iter()
        .map(|s| (-2.0 * t * s.norm_sq as f64).exp() * s.sum)
        .collect();
    Ok(HeatDiscrepancyReport {
        t,
        n: config.n(),
        d,
        value: pairwise_sum(&weighted),
        lower_bound_ref: heat_floor(config.n(), d, n.powf(-2.0 / d as f64)),
        truncation_k: k_cut,
        tail_bound,
    })
}

/// Lower bound for `heat_discrepancy_l2(t).value / N²` valid for every
/// configuration of `n` points: with the integer `X = ⌈2 N^{1/d}⌉`,
/// `Σ_k e^{-2t‖k‖²}|S_k|² ≥ e^{-2tX²} Σ_{0<‖k‖≤X} |S_k|² ≥ e^{-2tX²}(N X^d − N²)`.
pub fn heat_floor(n: usize, d: usize, t: f64) -> f64 {
    let nf = n as f64;
    let x = match perfect_root(n, d) {
        Some(m) => 2.0 * m as f64,
        None => (2.0 * nf.powf(1.0 / d as f64)).ceil(),
    };
    (-2.0 * t * x * x).exp() * (nf * x.powi(d as i32) - nf * nf) / (nf * nf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDiscrepancy {
    pub sides: Vec<f64>,
    pub k_max: usize,
    /// `Σ_{0<‖k‖_∞≤K} |χ̂_S(k)|² |S_k|²`.
    pub value: f64,
    /// `N² (Π a_i − Π_i Σ_{|k|≤K} c_i(k)²)`, a bound on the omitted terms.
    pub tail_estimate: f64,
}

/// Squared `L²` discrepancy of the box `Π[0, a_i]` translated over the torus.
pub fn box_discrepancy_l2(config: &PointConfig, a: &[f64], k_max: usize) -> Result<BoxDiscrepancy> {
    let d = config.d();
    if a.len() != d {
        return invalid(format!("box has {} sides, dimension is {d}", a.len()));
    }
    if a.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return invalid("box sides must lie in (0, 1)");
    }
    if k_max == 0 {
        return invalid("truncation K must be at least 1");
    }
    check_work(d, config.n(), (k_max as f64) * (d as f64).sqrt())?;
    let km = k_max as i64;
    // factor[i][k + K] = |χ̂_{[0,a_i]}(k)|
    let factor: Vec<Vec<f64>> = a
        .iter()
        .map(|&ai| {
            (-km..=km)
                .map(|k| {
                    if k == 0 {
                        ai
                    } else {
                        (PI * k as f64 * ai).sin().abs() / (PI * k.abs() as f64)
                    }
                })
                .collect()
        })
        .collect();
    let mut ks = Vec::new();
    for_each_in_cube(d, km, |k| {
        if is_positive_half(k) {
            ks.push(k.to_vec());
        }
    });
    let terms: Vec<f64> = ks
        .par_iter()
        .map(|k| {
            let w: f64 = k
                .iter()
                .enumerate()
                .map(|(i, &c)| factor[i][(c + km) as usize].powi(2))
                .product();
            2.0 * w * exp_sum_unchecked(config, k).norm_sqr()
        })
        .collect();
    let n = config.n() as f64;
    let captured: f64 = factor.iter().map(|f| f.iter().map(|v| v * v).sum::<f64>()).product();
    let volume: f64 = a.iter().product();
    Ok(BoxDiscrepancy {
        sides: a.to_vec(),
        k_max,
        value: pairwise_sum(&terms),
        tail_estimate: (n * n * (volume - captured)).max(0.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossEnergyReport {
    pub n: usize,
    pub d: usize,
    pub s: f64,
    pub t_exponent: f64,
    pub e_s: f64,
    pub e_t: f64,
    /// `E_s / N^{1+s/d}`.
    pub ratio_s: f64,
    pub ratio_t: f64,
}

/// Riesz defects of one configuration at two exponents, with their natural
/// normalizations. Reports only.
pub fn cross_energy_experiment(config: &PointConfig, s: f64, t_exponent: f64) -> Result<CrossEnergyReport> {
    let d = config.d();
    let n = config.n() as f64;
    let e_s = energy_defect(config, &KernelSpec::riesz(d, s))?;
    let e_t = if t_exponent == s {
        e_s
    } else {
        energy_defect(config, &KernelSpec::riesz(d, t_exponent))?
    };
    Ok(CrossEnergyReport {
        n: config.n(),
        d,
        s,
        t_exponent,
        e_s,
        e_t,
        ratio_s: e_s / n.powf(1.0 + s / d as f64),
        ratio_t: e_t / n.powf(1.0 + t_exponent / d as f64),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfScaleReport {
    pub kernel: KernelSpec,
    /// `(t, Σ_k f̂(k) e^{-2t‖k‖²})`.
    pub samples: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub expected_slope: f64,
}

/// Self-interaction `⟨e^{tΔ}δ_0 * f, e^{tΔ}δ_0⟩` over `ts`, with its log-log slope in `t`.
pub fn self_interaction_scale(spec: &KernelSpec, ts: &[f64]) -> Result<SelfScaleReport> {
    if spec.family != KernelFamily::Riesz {
        return invalid("self-interaction scaling is defined for the riesz family");
    }
    let origin = vec![0.0; spec.d];
    let samples = ts
        .par_iter()
        .map(|&t| {
            if !(t.is_finite() && t > 0.0) {
                return invalid(format!("heat time t = {t} must be positive"));
            }
            Ok((t, smoothed_pair_interaction(&origin, spec, t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = if samples.len() >= 2 && samples.iter().all(|&(_, v)| v > 0.0) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
        log_log_slope(&xs, &ys).ok()
    } else {
        None
    };
    Ok(SelfScaleReport {
        kernel: spec.clone(),
        samples,
        slope,
        expected_slope: -spec.s() / 2.0,
    })
}
