use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_ui};

use super::KernelSpec;
use crate::error::{Error, Result};
use crate::lattice::{cutoff_radius, for_each_half_ball, for_each_in_cube};

/// Mean-zero periodic Riesz kernel evaluated by an Ewald split.
///
/// Starting from `‖y‖^{-s} = Γ(s/2)^{-1} ∫_0^∞ u^{s/2-1} e^{-u‖y‖²} du`, the
/// integral is split at `u = α`:
///
/// * `u > α` gives the screened real-space term
///   `Γ(s/2, α r²) / (Γ(s/2) r^s)`, summed over images `y + m`;
/// * `u < α` is periodized by Poisson summation into the frequency sum
///   `Σ_{k≠0} ĝ_k cos(2π⟨k,y⟩)` with
///   `ĝ_k = π^{d/2} Γ(s/2)^{-1} (π‖k‖)^{s-d} Γ((d-s)/2, π²‖k‖²/α)`.
///
/// The `k = 0` mode of the long-range part diverges and is dropped; subtracting
/// the cell mean of the screened term, `2π^{d/2} α^{(s-d)/2} / ((d-s) Γ(s/2))`,
/// makes the result exactly mean-zero. Both sums are truncated where the
/// lattice tail bound of `max(|g|, |∇g|)` drops below `tol / 4`.
#[derive(Clone, Debug)]
pub struct RieszKernel {
    spec: KernelSpec,
    d: usize,
    s: f64,
    alpha: f64,
    half_s: f64,
    inv_gamma_half_s: f64,
    images: Vec<f64>,
    freq_k: Vec<f64>,
    // 2ĝ_k per half-space representative
    freq_coef: Vec<f64>,
    neutralizer: f64,
    real_cutoff: f64,
    freq_cutoff: f64,
}

impl RieszKernel {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.d;
        let df = d as f64;
        let s = spec.s();
        let alpha = spec.alpha();
        let half_s = s / 2.0;
        let inv_gamma_half_s = 1.0 / gamma(half_s);
        let quarter_tol = spec.tol / 4.0;

        let real_h = |r: f64| {
            let x = alpha * r * r;
            let q = gamma_ui(half_s, x);
            let q1 = half_s * q + x.powf(half_s) * (-x).exp();
            inv_gamma_half_s * (q / r.powf(s)).max(2.0 * q1 / r.powf(s + 1.0))
        };
        let real_cutoff = cutoff_radius(d, 0.5, quarter_tol, real_h);
        let reach = real_cutoff + df.sqrt() / 2.0;
        let mut images = Vec::new();
        for_each_in_cube(d, reach.ceil() as i64, |m| {
            let n2: i64 = m.iter().map(|c| c * c).sum();
            if (n2 as f64) <= reach * reach {
                images.extend(m.iter().map(|&c| c as f64));
            }
        });

        let b = (df - s) / 2.0;
        let prefactor = PI.powf(df / 2.0) * inv_gamma_half_s;
        let coef = move |kn: f64| prefactor * (PI * kn).powf(s - df) * gamma_ui(b, PI * PI * kn * kn / alpha);
        let freq_cutoff = cutoff_radius(d, 1.0, quarter_tol, |kn| (1.0 + 2.0 * PI * kn) * coef(kn));
        let mut freq_k = Vec::new();
        let mut freq_coef = Vec::new();
        for_each_half_ball(d, freq_cutoff * freq_cutoff, |k, n2| {
            freq_k.extend(k.iter().map(|&c| c as f64));
            freq_coef.push(2.0 * coef((n2 as f64).sqrt()));
        });

        let neutralizer = 2.0 * PI.powf(df / 2.0) * alpha.powf(-b) / ((df - s) * gamma(half_s));

        Ok(Self {
            spec: spec.clone(),
            d,
            s,
            alpha,
            half_s,
            inv_gamma_half_s,
            images,
            freq_k,
            freq_coef,
            neutralizer,
            real_cutoff,
            freq_cutoff,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Real-space and frequency-space truncation radii.
    pub fn cutoffs(&self) -> (f64, f64) {
        (self.real_cutoff, self.freq_cutoff)
    }

    /// Number of real-space images and frequency pairs per evaluation.
    pub fn table_sizes(&self) -> (usize, usize) {
        (self.images.len() / self.d, self.freq_coef.len())
    }

    pub(crate) fn eval(&self, y: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let d = self.d;
        let mut value = -self.neutralizer;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }

        let mut p = [0.0f64; 8];
        let mut pv = vec![0.0; if d > 8 { d } else { 0 }];
        for m in self.images.chunks_exact(d) {
            let buf: &mut [f64] = if d <= 8 { &mut p[..d] } else { &mut pv };
            let mut r2 = 0.0;
            for i in 0..d {
                buf[i] = y[i] + m[i];
                r2 += buf[i] * buf[i];
            }
            let r = r2.sqrt();
            if r > self.real_cutoff {
                continue;
            }
            if r2 == 0.0 {
                return Err(Error::Singularity(
                    "riesz kernel evaluated at a lattice point".into(),
                ));
            }
            let x = self.alpha * r2;
            let q = gamma_ui(self.half_s, x);
            value += self.inv_gamma_half_s * q / r.powf(self.s);
            if let Some(g) = grad.as_deref_mut() {
                let q1 = self.half_s * q + x.powf(self.half_s) * (-x).exp();
                let scale = -2.0 * self.inv_gamma_half_s * q1 / r.powf(self.s + 2.0);
                for i in 0..d {
                    g[i] += scale * buf[i];
                }
            }
        }

        for (k, &c) in self.freq_k.chunks_exact(d).zip(&self.freq_coef) {
            let phase = 2.0 * PI * k.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
            let (sin, cos) = phase.sin_cos();
            value += c * cos;
            if let Some(g) = grad.as_deref_mut() {
                let scale = -2.0 * PI * c * sin;
                for i in 0..d {
                    g[i] += scale * k[i];
                }
            }
        }
        Ok(value)
    }
}
