//! Pair energy `Σ_{i≠j} f(x_i − x_j)` over ordered pairs, its defect relative to
//! the continuum value `N² ∫ f`, gradients and the Laplacian proxy.
//!
//! Pair terms are evaluated in parallel but reduced in a fixed order
//! ([`crate::lattice::pairwise_sum`] over the pair index `(i, j)`, `i < j`), so
//! results are bit-identical across thread counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{laplacian_proxy, KernelFamily, KernelSpec, PeriodicKernel};
use crate::lattice::pairwise_sum;
use crate::torus::{min_image_into, PointConfig};

/// Energy diagnostics of one configuration under one kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n: usize,
    pub d: usize,
    pub kernel: KernelSpec,
    pub pair_energy: f64,
    #[serde(rename = "defect_E")]
    pub defect_e: f64,
    /// Euclidean norm of the full `n × d` gradient.
    pub grad_norm: f64,
    pub laplacian_proxy: f64,
}

pub const CSV_HEADER: &str = "n,d,family,s_or_beta,pair_energy,defect_E,grad_norm,laplacian_proxy";

impl EnergyReport {
    pub fn compute(config: &PointConfig, spec: &KernelSpec) -> Result<Self> {
        let kernel = PeriodicKernel::new(spec)?;
        check_dim(config, spec)?;
        let (pair_energy, grad) = energy_and_gradient_with(config, &kernel)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let laplacian_proxy = match spec.family {
            KernelFamily::Riesz => laplacian_proxy_sum(config, spec.s())?,
            KernelFamily::Gaussian => gaussian_laplacian_sum(config, spec.beta())?,
        };
        Ok(Self {
            n: config.n(),
            d: config.d(),
            kernel: spec.clone(),
            pair_energy,
            defect_e: defect_from_pair(pair_energy, config.n(), spec),
            grad_norm,
            laplacian_proxy,
        })
    }

    pub fn csv_row(&self) -> String {
        let param = match self.kernel.family {
            KernelFamily::Riesz => self.kernel.s(),
            KernelFamily::Gaussian => self.kernel.beta(),
        };
        format!(
            "{},{},{},{},{:e},{:e},{:e},{:e}",
            self.n,
            self.d,
            self.kernel.family,
            param,
            self.pair_energy,
            self.defect_e,
            self.grad_norm,
            self.laplacian_proxy
        )
    }
}

fn check_dim(config: &PointConfig, spec: &KernelSpec) -> Result<()> {
    if config.d() != spec.d {
        return invalid(format!(
            "configuration dimension {} does not match kernel dimension {}",
            config.d(),
            spec.d
        ));
    }
    Ok(())
}

fn pair_indices(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn pair_error(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::Singularity(_) => Error::CoincidentPoints { i, j },
        other => other,
    }
}

/// Ordered-pair energy with a prebuilt kernel.
pub fn pair_energy_with(config: &PointConfig, kernel: &PeriodicKernel) -> Result<f64> {
    let d = config.d();
    check_dim(config, kernel.spec())?;
    let terms = pair_indices(config.n())
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |buf, (i, j)| {
                min_image_into(config.point(i), config.point(j), buf);
                kernel.eval_reduced(buf, None).map_err(|e| pair_error(e, i, j))
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    Ok(2.0 * pairwise_sum(&terms))
}

/// Energy and its `n × d` gradient (flat, row-major) with a prebuilt kernel.
///
/// Row `i` is `2 Σ_{j≠i} ∇f(x_i − x_j)`; each unordered pair is evaluated once and
/// its gradient is added to row `i` and subtracted from row `j`.
pub fn energy_and_gradient_with(
    config: &PointConfig,
    kernel: &PeriodicKernel,
) -> Result<(f64, Vec<f64>)> {
    let d = config.d();
    check_dim(config, kernel.spec())?;
    let pairs = pair_indices(config.n());
    let evals = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut y = vec![0.0; d];
            min_image_into(config.point(i), config.point(j), &mut y);
            let mut g = vec![0.0; d];
            let v = kernel
                .eval_reduced(&y, Some(&mut g))
                .map_err(|e| pair_error(e, i, j))?;
            Ok((v, g))
        })
        .collect::<Result<Vec<(f64, Vec<f64>)>>>()?;
    let values: Vec<f64> = evals.iter().map(|(v, _)| *v).collect();
    let mut grad = vec![0.0; config.n() * d];
    for (&(i, j), (_, g)) in pairs.iter().zip(&evals) {
        for a in 0..d {
            grad[i * d + a] += 2.0 * g[a];
            grad[j * d + a] -= 2.0 * g[a];
        }
    }
    Ok((2.0 * pairwise_sum(&values), grad))
}

pub fn pair_energy(config: &PointConfig, spec: &KernelSpec) -> Result<f64> {
    check_dim(config, spec)?;
    pair_energy_with(config, &PeriodicKernel::new(spec)?)
}

fn defect_from_pair(pair: f64, n: usize, spec: &KernelSpec) -> f64 {
    let n = n as f64;
    pair - n * n * spec.cell_mean()
}

/// `E = pair_energy − N²·(cell mean of f)`; equal to the pair energy for riesz.
pub fn energy_defect(config: &PointConfig, spec: &KernelSpec) -> Result<f64> {
    Ok(defect_from_pair(pair_energy(config, spec)?, config.n(), spec))
}

/// Gradient rows of the pair energy, one `Vec` per point.
pub fn energy_gradient(config: &PointConfig, spec: &KernelSpec) -> Result<Vec<Vec<f64>>> {
    check_dim(config, spec)?;
    let (_, g) = energy_and_gradient_with(config, &PeriodicKernel::new(spec)?)?;
    Ok(g.chunks_exact(config.d()).map(<[f64]>::to_vec).collect())
}

fn min_image_distances(config: &PointConfig) -> Result<Vec<f64>> {
    let d = config.d();
    pair_indices(config.n())
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |buf, (i, j)| {
                min_image_into(config.point(i), config.point(j), buf);
                let r = buf.iter().map(|c| c * c).sum::<f64>().sqrt();
                if r == 0.0 {
                    Err(Error::CoincidentPoints { i, j })
                } else {
                    Ok(r)
                }
            },
        )
        .collect()
}

/// `|s(s+2−d)| Σ_{i≠j} r_{ij}^{−(s+2)}` with minimum-image distances `r_{ij}`.
pub fn laplacian_proxy_sum(config: &PointConfig, s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return invalid(format!("exponent s = {s} must be positive"));
    }
    let d = config.d();
    let terms: Vec<f64> = min_image_distances(config)?
        .into_iter()
        .map(|r| laplacian_proxy(s, d, r))
        .collect();
    Ok(2.0 * pairwise_sum(&terms))
}

/// `Σ_{i≠j} |Δ e^{−β r²}|` at minimum-image distances.
fn gaussian_laplacian_sum(config: &PointConfig, beta: f64) -> Result<f64> {
    let d = config.d() as f64;
    let terms: Vec<f64> = min_image_distances(config)?
        .into_iter()
        .map(|r| ((4.0 * beta * beta * r * r - 2.0 * d * beta) * (-beta * r * r).exp()).abs())
        .collect();
    Ok(2.0 * pairwise_sum(&terms))
}

/// Right-hand side of the spectral-sum bound without its implied constant:
/// `N^{1−s/d}·E + N^{(d−s−2)/d}·laplacian_proxy_sum`.
pub fn theorem1_bound(config: &PointConfig, spec: &KernelSpec, e: f64) -> Result<f64> {
    if spec.family != KernelFamily::Riesz {
        return invalid("the spectral-sum bound is defined for the riesz family");
    }
    spec.validate()?;
    check_dim(config, spec)?;
    let s = spec.s();
    let d = spec.d as f64;
    let n = config.n() as f64;
    let proxy = laplacian_proxy_sum(config, s)?;
    Ok(n.powf(1.0 - s / d) * e + n.powf((d - s - 2.0) / d) * proxy)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("slope fit needs at least two paired samples");
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid("slope fit needs positive finite samples");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{gen_grid, gen_random, ConfigMeta};
    use proptest::prelude::*;

    const ZETA_HALF: f64 = -1.4603545088095868128894991525;

    fn pts(d: usize, rows: &[&[f64]]) -> PointConfig {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PointConfig::from_rows(d, &rows, ConfigMeta::new("test")).unwrap()
    }

    #[test]
    fn antipodal_gaussian_pair() {
        let c = pts(1, &[&[0.0], &[0.5]]);
        let e = pair_energy(&c, &KernelSpec::gaussian(1, 16.0)).unwrap();
        let direct: f64 = (-30..=30).map(|m| (-16.0 * (0.5 + m as f64).powi(2)).exp()).sum();
        assert!((e - 2.0 * direct).abs() < 1e-14);
        assert!((e - 4.0 * (-4.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn single_point_is_zero() {
        let c = pts(2, &[&[0.2, 0.3]]);
        assert_eq!(pair_energy(&c, &KernelSpec::riesz(2, 1.0)).unwrap(), 0.0);
        assert_eq!(laplacian_proxy_sum(&c, 1.0).unwrap(), 0.0);
        assert_eq!(theorem1_bound(&c, &KernelSpec::riesz(2, 1.0), 0.0).unwrap(), 0.0);
    }

    // Σ_{j=1}^{N-1} [ζ(s, j/N) + ζ(s, 1 − j/N)] = 2ζ(s)(N^s − 1).
    #[test]
    fn equally_spaced_riesz_energy_closed_form() {
        for m in [2usize, 4, 8, 16] {
            let c = gen_grid(1, m).unwrap();
            let e = pair_energy(&c, &KernelSpec::riesz(1, 0.5)).unwrap();
            let n = m as f64;
            let want = n * 2.0 * ZETA_HALF * (n.sqrt() - 1.0);
            assert!((e - want).abs() < 1e-9 * want.abs(), "m={m}: {e} vs {want}");
        }
    }

    #[test]
    fn riesz_defect_equals_pair_energy() {
        let c = gen_random(2, 12, 5).unwrap();
        let spec = KernelSpec::riesz(2, 1.0);
        assert_eq!(energy_defect(&c, &spec).unwrap(), pair_energy(&c, &spec).unwrap());
    }

    #[test]
    fn gaussian_defect_monte_carlo_mean() {
        let spec = KernelSpec::gaussian(2, 10.0);
        let kernel = PeriodicKernel::new(&spec).unwrap();
        let n = 10usize;
        let defects: Vec<f64> = (0..200)
            .map(|seed| {
                let c = gen_random(2, n, 1000 + seed).unwrap();
                defect_from_pair(pair_energy_with(&c, &kernel).unwrap(), n, &spec)
            })
            .collect();
        let k = defects.len() as f64;
        let mean = defects.iter().sum::<f64>() / k;
        let var = defects.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        let want = -(n as f64) * spec.cell_mean();
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} (se {se})");
    }

    #[test]
    fn coincident_riesz_points_name_the_pair() {
        let c = pts(1, &[&[0.1], &[0.4], &[0.1]]);
        match pair_energy(&c, &KernelSpec::riesz(1, 0.5)) {
            Err(Error::CoincidentPoints { i, j }) => assert_eq!((i, j), (0, 2)),
            other => panic!("{other:?}"),
        }
        assert!(laplacian_proxy_sum(&c, 0.5).is_err());
        assert!(pair_energy(&c, &KernelSpec::gaussian(1, 4.0)).is_ok());
    }

    fn fd_check(config: &PointConfig, spec: &KernelSpec, rel: f64) {
        let kernel = PeriodicKernel::new(spec).unwrap();
        let (_, g) = energy_and_gradient_with(config, &kernel).unwrap();
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let h = 1e-6;
        for idx in 0..g.len() {
            let shifted = |delta: f64| {
                let mut c = config.coords().to_vec();
                c[idx] += delta;
                let c = PointConfig::from_unwrapped(config.d(), c, ConfigMeta::new("fd")).unwrap();
                pair_energy_with(&c, &kernel).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            assert!(
                (fd - g[idx]).abs() <= rel * scale,
                "component {idx}: fd {fd} vs {}",
                g[idx]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let d = 1 + (seed % 2) as usize;
            let c = gen_random(d, 6, seed).unwrap();
            fd_check(&c, &KernelSpec::riesz(d, 0.4 * d as f64), 1e-5);
            fd_check(&c, &KernelSpec::gaussian(d, 8.0), 1e-5);
        }
    }

    #[test]
    fn gradient_rows_sum_to_zero_and_vanish_on_grid() {
        let c = gen_random(2, 15, 9).unwrap();
        let g = energy_gradient(&c, &KernelSpec::riesz(2, 1.3)).unwrap();
        for a in 0..2 {
            assert!(g.iter().map(|r| r[a]).sum::<f64>().abs() < 1e-10);
        }
        let grid = gen_grid(1, 9).unwrap();
        for r in energy_gradient(&grid, &KernelSpec::riesz(1, 0.5)).unwrap() {
            assert!(r[0].abs() < 1e-8);
        }
    }

    #[test]
    fn laplacian_proxy_two_points() {
        let c = pts(1, &[&[0.0], &[0.5]]);
        let v = laplacian_proxy_sum(&c, 0.5).unwrap();
        assert!((v - 0.75 * 2.0 * 0.5f64.powf(-2.5)).abs() < 1e-12);
        assert!((v - 8.485281).abs() < 1e-6);
    }

    #[test]
    fn grid_scaling_slopes() {
        let slope_over = |ms: &[usize], f: &dyn Fn(&PointConfig, f64) -> f64| {
            let ns: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
            let ys: Vec<f64> = ms.iter().map(|&m| f(&gen_grid(1, m).unwrap(), m as f64)).collect();
            log_log_slope(&ns, &ys).unwrap()
        };
        let spec = KernelSpec::riesz(1, 0.5);
        let lap = slope_over(&[4, 8, 16], &|c, _| laplacian_proxy_sum(c, 0.5).unwrap());
        assert!((lap - 3.5).abs() < 0.35, "{lap}");
        // E carries a (N^s - 1) factor, so the addends need larger N to reach N².
        let big = [32, 64, 128];
        let first = slope_over(&big, &|c, n| n.sqrt() * energy_defect(c, &spec).unwrap().abs());
        let second = slope_over(&big, &|c, n| n.powf(-1.5) * laplacian_proxy_sum(c, 0.5).unwrap());
        for slope in [first, second] {
            assert!((slope - 2.0).abs() < 0.2, "{slope}");
        }
    }

    #[test]
    fn report_and_csv() {
        let c = gen_grid(2, 3).unwrap();
        let spec = KernelSpec::gaussian(2, 9.0);
        let r = EnergyReport::compute(&c, &spec).unwrap();
        assert!((r.defect_e - (r.pair_energy - 81.0 * spec.cell_mean())).abs() < 1e-12);
        assert!(r.grad_norm < 1e-10 && r.laplacian_proxy >= 0.0);
        assert_eq!(r.csv_row().split(',').count(), CSV_HEADER.split(',').count());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("defect_E").is_some());
    }

    #[test]
    fn theorem1_bound_requires_riesz() {
        let c = gen_grid(1, 4).unwrap();
        assert!(theorem1_bound(&c, &KernelSpec::gaussian(1, 4.0), 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_and_permutation_invariance(seed in 0u64..10_000, sx in 0.0f64..1.0, sy in 0.0f64..1.0, rot in 1usize..7) {
            let c = gen_random(2, 8, seed).unwrap();
            let spec = KernelSpec::riesz(2, 1.0);
            let kernel = PeriodicKernel::new(&spec).unwrap();
            let e0 = pair_energy_with(&c, &kernel).unwrap();
            let shifted = c.translated(&[sx, sy]).unwrap();
            let e1 = pair_energy_with(&shifted, &kernel).unwrap();
            prop_assert!((e0 - e1).abs() <= 1e-9 * e0.abs().max(1.0));
            let mut rows: Vec<Vec<f64>> = c.iter().map(<[f64]>::to_vec).collect();
            rows.rotate_left(rot);
            let perm = PointConfig::from_rows(2, &rows, ConfigMeta::new("perm")).unwrap();
            let e2 = pair_energy_with(&perm, &kernel).unwrap();
            prop_assert!((e0 - e2).abs() <= 1e-12 * e0.abs().max(1.0));
        }
    }
}
