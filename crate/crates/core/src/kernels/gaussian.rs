use super::KernelSpec;
use crate::error::Result;
use crate::lattice::{cutoff_radius, for_each_in_cube};

/// Periodized Gaussian `Σ_m exp(-β‖y+m‖²)` by direct image summation.
#[derive(Clone, Debug)]
pub struct GaussianKernel {
    spec: KernelSpec,
    d: usize,
    beta: f64,
    images: Vec<f64>,
    cutoff: f64,
}

impl GaussianKernel {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.d;
        let beta = spec.beta();
        let cutoff = cutoff_radius(d, 0.5, spec.tol / 4.0, |r| {
            (1.0 + 2.0 * beta * r) * (-beta * r * r).exp()
        });
        let reach = cutoff + (d as f64).sqrt() / 2.0;
        let mut images = Vec::new();
        for_each_in_cube(d, reach.ceil() as i64, |m| {
            let n2: i64 = m.iter().map(|c| c * c).sum();
            if (n2 as f64) <= reach * reach {
                images.extend(m.iter().map(|&c| c as f64));
            }
        });
        Ok(Self {
            spec: spec.clone(),
            d,
            beta,
            images,
            cutoff,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub(crate) fn eval(&self, y: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let cut2 = self.cutoff * self.cutoff;
        let mut value = 0.0;
        for m in self.images.chunks_exact(self.d) {
            let r2: f64 = y.iter().zip(m).map(|(a, b)| (a + b) * (a + b)).sum();
            if r2 > cut2 {
                continue;
            }
            let e = (-self.beta * r2).exp();
            value += e;
            if let Some(g) = grad.as_deref_mut() {
                for i in 0..self.d {
                    g[i] -= 2.0 * self.beta * (y[i] + m[i]) * e;
                }
            }
        }
        value
    }
}
