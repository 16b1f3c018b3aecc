//! Periodic pair kernels on `T^d`.
//!
//! Two families are supported:
//!
//! * **riesz**: the mean-zero periodization of `‖x‖^{-s}`, `0 < s < d`, whose
//!   Fourier coefficients are exactly `C(d,s)‖k‖^{s-d}` for `k ≠ 0` and `0` at
//!   `k = 0`, with `C(d,s) = π^{s-d/2} Γ((d-s)/2) / Γ(s/2)`. Point values are
//!   computed with a Gamma-integral (Ewald) split, see [`RieszKernel`].
//! * **gaussian**: `Σ_m exp(-β‖x+m‖²)`, evaluated by image summation.
//!
//! Kernels are built once from a [`KernelSpec`] (the constructor precomputes
//! image and frequency tables) and are then cheap to evaluate.

mod gaussian;
mod heat;
mod riesz;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::torus::min_image_into;

pub use gaussian::GaussianKernel;
pub use heat::{
    condition3_min_c2, condition3_residual, heat_fourier_sum, laplacian_proxy, lemma1_check,
    smoothed_pair_interaction, Lemma1Report, Lemma1Sample,
};
pub use riesz::RieszKernel;

pub const DEFAULT_TOL: f64 = 1e-12;
/// Ewald split point `u = α`; `π` balances the real and frequency sums.
pub const DEFAULT_ALPHA: f64 = PI;

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Riesz,
    Gaussian,
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelFamily::Riesz => "riesz",
            KernelFamily::Gaussian => "gaussian",
        })
    }
}

/// Kernel family and parameters.
///
/// `tol` is the absolute error target used to truncate every lattice sum
/// evaluated for this kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl KernelSpec {
    pub fn riesz(d: usize, s: f64) -> Self {
        Self {
            family: KernelFamily::Riesz,
            d,
            s: Some(s),
            beta: None,
            alpha: Some(DEFAULT_ALPHA),
            tol: DEFAULT_TOL,
        }
    }

    pub fn gaussian(d: usize, beta: f64) -> Self {
        Self {
            family: KernelFamily::Gaussian,
            d,
            s: None,
            beta: Some(beta),
            alpha: None,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("kernel dimension must be at least 1");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return invalid(format!("tolerance {} must be positive", self.tol));
        }
        match self.family {
            KernelFamily::Riesz => {
                let s = self
                    .s
                    .ok_or_else(|| crate::Error::InvalidInput("riesz kernel needs s".into()))?;
                if !(s > 0.0 && s < self.d as f64) {
                    return invalid(format!("riesz exponent s = {s} outside (0, {})", self.d));
                }
                let alpha = self.alpha();
                if !(alpha.is_finite() && alpha > 0.0) {
                    return invalid(format!("Ewald split alpha = {alpha} must be positive"));
                }
            }
            KernelFamily::Gaussian => {
                let beta = self.beta.unwrap_or(f64::NAN);
                if !(beta.is_finite() && beta > 0.0) {
                    return invalid(format!("gaussian beta = {beta} must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Riesz exponent; `NaN` for the gaussian family.
    pub fn s(&self) -> f64 {
        self.s.unwrap_or(f64::NAN)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(f64::NAN)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    /// Unit-cell mean of the kernel, i.e. its `k = 0` coefficient.
    pub fn cell_mean(&self) -> f64 {
        match self.family {
            KernelFamily::Riesz => 0.0,
            KernelFamily::Gaussian => (PI / self.beta()).powf(self.d as f64 / 2.0),
        }
    }

    /// Fourier coefficient as a function of `‖k‖`, for `‖k‖ > 0`.
    pub(crate) fn radial_coefficient(&self, knorm: f64) -> f64 {
        match self.family {
            KernelFamily::Riesz => riesz_constant(self.d, self.s()) * knorm.powf(self.s() - self.d as f64),
            KernelFamily::Gaussian => {
                self.cell_mean() * (-PI * PI * knorm * knorm / self.beta()).exp()
            }
        }
    }
}

/// `C(d,s) = π^{s-d/2} Γ((d-s)/2) / Γ(s/2)`.
pub fn riesz_constant(d: usize, s: f64) -> f64 {
    let d = d as f64;
    PI.powf(s - d / 2.0) * gamma((d - s) / 2.0) / gamma(s / 2.0)
}

/// Fourier coefficient `f̂(k)` of the periodic kernel.
pub fn fourier_coefficient(spec: &KernelSpec, k: &[i64]) -> f64 {
    let n2: i64 = k.iter().map(|c| c * c).sum();
    if n2 == 0 {
        return spec.cell_mean();
    }
    spec.radial_coefficient((n2 as f64).sqrt())
}

/// A kernel with its evaluation tables.
#[derive(Clone, Debug)]
pub enum PeriodicKernel {
    Riesz(RieszKernel),
    Gaussian(GaussianKernel),
}

impl PeriodicKernel {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.family {
            KernelFamily::Riesz => PeriodicKernel::Riesz(RieszKernel::new(spec)?),
            KernelFamily::Gaussian => PeriodicKernel::Gaussian(GaussianKernel::new(spec)?),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        match self {
            PeriodicKernel::Riesz(k) => k.spec(),
            PeriodicKernel::Gaussian(k) => k.spec(),
        }
    }

    pub fn d(&self) -> usize {
        self.spec().d
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, PeriodicKernel::Riesz(_))
    }

    /// Kernel value at `x` (any representative of a torus point).
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let y = self.reduce(x)?;
        self.eval_reduced(&y, None)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.reduce(x)?;
        let mut g = vec![0.0; y.len()];
        self.eval_reduced(&y, Some(&mut g))?;
        Ok(g)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let y = self.reduce(x)?;
        let mut g = vec![0.0; y.len()];
        let v = self.eval_reduced(&y, Some(&mut g))?;
        Ok((v, g))
    }

    fn reduce(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d() {
            return invalid(format!(
                "point has {} coordinates, kernel dimension is {}",
                x.len(),
                self.d()
            ));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return invalid("non-finite coordinate");
        }
        let mut y = vec![0.0; x.len()];
        min_image_into(x, &vec![0.0; x.len()], &mut y);
        Ok(y)
    }

    /// Evaluate at a minimum-image vector; adds the gradient into `grad` when given.
    pub(crate) fn eval_reduced(&self, y: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        match self {
            PeriodicKernel::Riesz(k) => k.eval(y, grad),
            PeriodicKernel::Gaussian(k) => Ok(k.eval(y, grad)),
        }
    }
}
