//! Heat-smoothed kernel quantities.
//!
//! The heat propagator acts on Fourier coefficients as `e^{-t‖k‖²}`, so the
//! interaction of two mollified Dirac masses is
//! `⟨e^{tΔ}δ_x * f, e^{tΔ}δ_y⟩ = Σ_k f̂(k) e^{-2t‖k‖²} e^{2πi⟨k, x-y⟩}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{KernelFamily, KernelSpec, PeriodicKernel};
use crate::error::{invalid, Error, Result};
use crate::lattice::{cutoff_radius, for_each_half_ball};
use crate::torus::min_image_displacement;

const MAX_FREQUENCIES: f64 = 2e8;

/// `Σ_k f̂(k) e^{-τ‖k‖²} cos(2π⟨k,δ⟩)`, truncated where the tail of
/// `|f̂(k)| e^{-τ‖k‖²}` is below `spec.tol / 2`.
pub fn heat_fourier_sum(spec: &KernelSpec, tau: f64, delta: &[f64]) -> Result<f64> {
    spec.validate()?;
    if delta.len() != spec.d {
        return invalid("displacement dimension does not match kernel");
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return invalid(format!("heat time {tau} must be finite and non-negative"));
    }
    if tau == 0.0 && spec.family == KernelFamily::Riesz {
        return invalid("riesz frequency sum diverges without smoothing (t = 0)");
    }
    let d = spec.d;
    let h = |kn: f64| spec.radial_coefficient(kn) * (-tau * kn * kn).exp();
    let cutoff = cutoff_radius(d, 1.0, spec.tol / 2.0, h);
    let volume = crate::lattice::unit_ball_volume(d) * cutoff.powi(d as i32);
    if volume > MAX_FREQUENCIES {
        return Err(Error::Resource(format!(
            "frequency cutoff {cutoff:.1} in d = {d} needs ~{volume:.2e} terms"
        )));
    }
    let max_n2 = (cutoff * cutoff).floor() as usize;
    let coef: Vec<f64> = (0..=max_n2)
        .map(|n2| {
            if n2 == 0 {
                0.0
            } else {
                2.0 * h((n2 as f64).sqrt())
            }
        })
        .collect();
    let mut total = 0.0;
    for_each_half_ball(d, cutoff * cutoff, |k, n2| {
        let phase: f64 = k.iter().zip(delta).map(|(&a, b)| a as f64 * b).sum();
        total += coef[n2 as usize] * (2.0 * PI * phase).cos();
    });
    Ok(spec.cell_mean() + total)
}

/// Interaction of heat-mollified point masses at separation `delta`,
/// `Σ_k f̂(k) e^{-2t‖k‖²} e^{2πi⟨k,δ⟩}`.
pub fn smoothed_pair_interaction(delta: &[f64], spec: &KernelSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("heat time {t} must be non-negative"));
    }
    heat_fourier_sum(spec, 2.0 * t, delta)
}

/// `|s(s+2-d)| r^{-(s+2)}`, the radial stand-in for `|Δf|`.
pub fn laplacian_proxy(s: f64, d: usize, r: f64) -> f64 {
    (s * (s + 2.0 - d as f64)).abs() * r.powf(-(s + 2.0))
}

fn riesz_only(spec: &KernelSpec) -> Result<()> {
    spec.validate()?;
    if spec.family != KernelFamily::Riesz {
        return invalid("operation requires the riesz family");
    }
    Ok(())
}

/// `e^{tΔ}f(x) - f(x) - c₂ t |Δf(x)|`, with `|Δf|` replaced by
/// [`laplacian_proxy`] at the minimum-image distance. Negative means the
/// convexity condition holds at `(x, t, c₂)`.
pub fn condition3_residual(spec: &KernelSpec, x: &[f64], t: f64, c2: f64) -> Result<f64> {
    riesz_only(spec)?;
    if !(t > 0.0) {
        return invalid(format!("heat time {t} must be positive"));
    }
    let kernel = PeriodicKernel::new(spec)?;
    condition3_parts(spec, &kernel, x, t).map(|(smoothed, f, proxy)| smoothed - f - c2 * t * proxy)
}

fn condition3_parts(
    spec: &KernelSpec,
    kernel: &PeriodicKernel,
    x: &[f64],
    t: f64,
) -> Result<(f64, f64, f64)> {
    let disp = min_image_displacement(x, &vec![0.0; x.len()])?;
    let f = kernel.value(x)?;
    let smoothed = heat_fourier_sum(spec, t, &disp.vector)?;
    Ok((smoothed, f, laplacian_proxy(spec.s(), spec.d, disp.norm)))
}

/// Smallest `c₂ ≥ 0` making [`condition3_residual`] non-positive on every
/// `(x, t)` pair of the scan.
pub fn condition3_min_c2(spec: &KernelSpec, xs: &[Vec<f64>], ts: &[f64]) -> Result<f64> {
    riesz_only(spec)?;
    let kernel = PeriodicKernel::new(spec)?;
    let mut c2: f64 = 0.0;
    for x in xs {
        for &t in ts {
            if !(t > 0.0) {
                return invalid(format!("heat time {t} must be positive"));
            }
            let (smoothed, f, proxy) = condition3_parts(spec, &kernel, x, t)?;
            if proxy > 0.0 {
                c2 = c2.max((smoothed - f) / (t * proxy));
            }
        }
    }
    Ok(c2)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma1Sample {
    pub norm: f64,
    pub t: f64,
    pub smoothed: f64,
    pub kernel: f64,
    /// `A / r^s`
    pub first_branch: f64,
    /// `f(δ) + B t / r^{s+2}`
    pub second_branch: f64,
}

/// Empirical constants for the two-branch bound on the smoothed interaction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma1Report {
    /// Smallest `A` with `smoothed ≤ A / r^s` on the sample set.
    pub a_const: f64,
    /// Smallest `B ≥ 0` with `smoothed ≤ f(δ) + B t / r^{s+2}` on the sample set.
    pub b_const: f64,
    /// Largest `smoothed / min(branches)` over samples with a positive minimum.
    pub max_ratio: f64,
    pub bounded: bool,
    pub samples: Vec<Lemma1Sample>,
}

/// Fit the constants of `smoothed ≤ min{A/r^s, f(δ) + B t/r^{s+2}}` over every
/// displacement × heat-time pair.
pub fn lemma1_check(
    spec: &KernelSpec,
    displacements: &[Vec<f64>],
    ts: &[f64],
) -> Result<Lemma1Report> {
    riesz_only(spec)?;
    if displacements.is_empty() || ts.is_empty() {
        return invalid("lemma1 check needs at least one displacement and one heat time");
    }
    let kernel = PeriodicKernel::new(spec)?;
    let s = spec.s();
    let mut raw = Vec::with_capacity(displacements.len() * ts.len());
    for delta in displacements {
        let disp = min_image_displacement(delta, &vec![0.0; delta.len()])?;
        let f = kernel.value(&disp.vector)?;
        for &t in ts {
            if !(t > 0.0) {
                return invalid(format!("heat time {t} must be positive"));
            }
            let smoothed = smoothed_pair_interaction(&disp.vector, spec, t)?;
            raw.push((disp.norm, t, smoothed, f));
        }
    }
    let a_const = raw
        .iter()
        .map(|&(r, _, sm, _)| sm * r.powf(s))
        .fold(f64::NEG_INFINITY, f64::max);
    let b_const = raw
        .iter()
        .map(|&(r, t, sm, f)| (sm - f) * r.powf(s + 2.0) / t)
        .fold(0.0, f64::max);
    let samples: Vec<Lemma1Sample> = raw
        .into_iter()
        .map(|(norm, t, smoothed, kernel)| Lemma1Sample {
            norm,
            t,
            smoothed,
            kernel,
            first_branch: a_const / norm.powf(s),
            second_branch: kernel + b_const * t / norm.powf(s + 2.0),
        })
        .collect();
    let max_ratio = samples
        .iter()
        .filter_map(|x| {
            let m = x.first_branch.min(x.second_branch);
            (m > 0.0).then(|| x.smoothed / m)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Lemma1Report {
        a_const,
        b_const,
        max_ratio,
        bounded: a_const.is_finite() && b_const.is_finite(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_t_kills_every_mode() {
        let spec = KernelSpec::riesz(1, 0.5);
        let v = smoothed_pair_interaction(&[0.2], &spec, 10.0).unwrap();
        // only the |k| = 1 shell survives: 2 e^{-20} cos(2π·0.2)
        let leading = 2.0 * (-20.0f64).exp() * (2.0 * PI * 0.2).cos();
        assert!(v.abs() < 1e-8);
        assert!((v - leading).abs() < 1e-12 * leading.abs().max(1e-300) + 1e-25);
    }

    #[test]
    fn monotone_in_t_at_zero_separation() {
        let spec = KernelSpec::riesz(1, 0.5);
        let a = smoothed_pair_interaction(&[0.0], &spec, 0.01).unwrap();
        let b = smoothed_pair_interaction(&[0.0], &spec, 0.02).unwrap();
        assert!(a >= b);
        let spec2 = KernelSpec::riesz(2, 1.0);
        let mut prev = f64::INFINITY;
        for t in [1e-3, 2e-3, 5e-3, 1e-2, 0.1] {
            let v = smoothed_pair_interaction(&[0.3, 0.1], &spec2, t).unwrap();
            let v0 = smoothed_pair_interaction(&[0.0, 0.0], &spec2, t).unwrap();
            assert!(v0 <= prev);
            assert!(v <= v0);
            prev = v0;
        }
    }

    #[test]
    fn riesz_needs_positive_t() {
        let spec = KernelSpec::riesz(1, 0.5);
        assert!(smoothed_pair_interaction(&[0.2], &spec, 0.0).is_err());
        assert!(smoothed_pair_interaction(&[0.2], &spec, -1.0).is_err());
        let g = KernelSpec::gaussian(1, 36.0);
        let k = PeriodicKernel::new(&g).unwrap();
        let v = smoothed_pair_interaction(&[0.2], &g, 0.0).unwrap();
        assert!((v - k.value(&[0.2]).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn small_t_recovers_the_kernel() {
        let spec = KernelSpec::riesz(1, 0.5);
        let k = PeriodicKernel::new(&spec).unwrap();
        let sm = smoothed_pair_interaction(&[0.25], &spec, 1e-5).unwrap();
        let f = k.value(&[0.25]).unwrap();
        assert!((sm / f - 1.0).abs() < 0.02, "{sm} vs {f}");
    }

    #[test]
    fn proxy_formula() {
        let v = laplacian_proxy(0.5, 1, 0.5);
        assert!((v - 0.75 * 0.5f64.powf(-2.5)).abs() < 1e-14);
        assert_eq!(laplacian_proxy(1.0, 3, 0.3), 0.0);
    }

    #[test]
    fn condition3_at_the_antipode() {
        let spec = KernelSpec::riesz(1, 0.5);
        let r = condition3_residual(&spec, &[0.5], 1e-3, 10.0).unwrap();
        assert!(r < 0.0, "residual {r}");
    }

    #[test]
    fn condition3_vanishes_as_t_goes_to_zero() {
        let spec = KernelSpec::riesz(1, 0.5);
        let t = 1e-6;
        let kernel = PeriodicKernel::new(&spec).unwrap();
        let (smoothed, f, proxy) = condition3_parts(&spec, &kernel, &[0.5], t).unwrap();
        assert!((smoothed - f).abs() < 1e-6);
        let r = condition3_residual(&spec, &[0.5], t, 1.0).unwrap();
        assert!(r <= 1e-6 && r >= -t * proxy - 1e-6, "residual {r}");
    }

    #[test]
    fn condition3_scan_is_tight() {
        let spec = KernelSpec::riesz(1, 0.5);
        let xs: Vec<Vec<f64>> = [0.1, 0.2, 0.3, 0.4, 0.5].iter().map(|&x| vec![x]).collect();
        let ts = [1e-4, 1e-3, 1e-2];
        let c2 = condition3_min_c2(&spec, &xs, &ts).unwrap();
        assert!(c2.is_finite() && c2 >= 0.0);
        for x in &xs {
            for &t in &ts {
                assert!(condition3_residual(&spec, x, t, c2).unwrap() <= 1e-12);
            }
        }
        eprintln!("condition (3) minimal c2 on scan: {c2:.6}");
    }

    #[test]
    fn lemma1_branches() {
        let spec = KernelSpec::riesz(1, 0.5);
        let deltas: Vec<Vec<f64>> = (1..=10).map(|i| vec![0.05 * i as f64]).collect();
        let ts = [1e-4, 1e-3, 1e-2, 1e-1];
        let rep = lemma1_check(&spec, &deltas, &ts).unwrap();
        assert!(rep.bounded);
        assert!(rep.max_ratio <= 1.0 + 1e-12);
        for smp in &rep.samples {
            assert!(smp.smoothed * smp.norm.powf(0.5) <= rep.a_const + 1e-12);
        }
        let far = rep
            .samples
            .iter()
            .find(|x| (x.norm - 0.4).abs() < 1e-12 && x.t == 1e-4)
            .unwrap();
        assert!(far.second_branch < far.first_branch);
        assert!(far.smoothed <= far.second_branch + 1e-12);
    }
}
