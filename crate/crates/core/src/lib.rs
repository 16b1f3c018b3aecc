//! Pair energies on the flat torus `T^d`, their local minimizers, and the
//! exponential-sum diagnostics used to measure how regular a configuration is.
//!
//! * [`torus`]: canonical coordinates, minimum-image metric, generators.
//! * [`kernels`]: periodic Riesz (Ewald split) and Gaussian kernels, heat smoothing.
//! * [`energy`]: pair energy, energy defect, gradients, Laplacian proxy.
//! * [`optimizer`]: gradient descent with Armijo backtracking and multi-start.
//! * [`spectral`]: exponential sums, Montgomery margin, quadrature and discrepancy measures.
//! * [`oracle`]: slow, independent reference computations for verification.
//! * [`fixtures`]: frozen reference values and their regeneration.

pub mod energy;
pub mod error;
pub mod fixtures;
pub mod kernels;
mod lattice;
pub mod optimizer;
pub mod oracle;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec, PeriodicKernel};
pub use torus::{ConfigMeta, Displacement, PointConfig};
