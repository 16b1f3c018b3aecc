//! Integer-lattice enumeration and tail bounds for truncated lattice sums.

use std::f64::consts::PI;

/// Visit every `k ∈ Z^d` with `‖k‖_∞ ≤ radius`, in lexicographic order.
pub(crate) fn for_each_in_cube(d: usize, radius: i64, mut f: impl FnMut(&[i64])) {
    let mut k = vec![-radius; d];
    loop {
        f(&k);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if k[axis] < radius {
                k[axis] += 1;
                break;
            }
            k[axis] = -radius;
        }
    }
}

/// Visit every nonzero `k` with `‖k‖² ≤ radius_sq` whose first nonzero
/// component is positive. Each `±k` pair is visited exactly once.
pub(crate) fn for_each_half_ball(d: usize, radius_sq: f64, mut f: impl FnMut(&[i64], i64)) {
    let r = radius_sq.max(0.0).sqrt().floor() as i64;
    for_each_in_cube(d, r, |k| {
        if !is_positive_half(k) {
            return;
        }
        let n2 = norm_sq_i(k);
        if (n2 as f64) <= radius_sq {
            f(k, n2);
        }
    });
}

pub(crate) fn is_positive_half(k: &[i64]) -> bool {
    for &c in k {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

pub(crate) fn norm_sq_i(k: &[i64]) -> i64 {
    k.iter().map(|c| c * c).sum()
}

pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
}

/// Upper bound on `Σ h(‖p‖)` over points `p` of a (possibly shifted) unit
/// lattice with `‖p‖ ≥ r0`, for `h` non-increasing on `[r0, ∞)`.
///
/// Points in the annulus `[r, r+w)` are counted by the volume of the annulus
/// widened by the half-diagonal of a unit cell.
pub(crate) fn lattice_tail_bound(d: usize, r0: f64, h: impl Fn(f64) -> f64) -> f64 {
    let half_diag = (d as f64).sqrt() / 2.0;
    let vol = unit_ball_volume(d);
    let mut total = 0.0;
    let mut r = r0;
    for _ in 0..1_000_000 {
        let w = (0.01 * r).max(0.25);
        let outer = r + w + half_diag;
        let inner = (r - half_diag).max(0.0);
        let count = vol * (outer.powi(d as i32) - inner.powi(d as i32));
        let term = count * h(r);
        total += term;
        if term <= total * 1e-18 || term < f64::MIN_POSITIVE {
            break;
        }
        r += w;
    }
    total
}

/// A radius, at least `start`, whose lattice tail bound is below `tol`;
/// within `0.05` (or 0.1%) of the smallest such radius.
pub(crate) fn cutoff_radius(d: usize, start: f64, tol: f64, h: impl Fn(f64) -> f64) -> f64 {
    let ok = |r: f64| lattice_tail_bound(d, r, &h) <= tol;
    if ok(start) {
        return start;
    }
    let mut lo = start;
    let mut hi = start.max(1.0) * 2.0;
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > (0.001 * lo).max(0.05) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Pairwise (cascade) summation in a fixed tree, so results do not depend on
/// how the terms were produced.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// SplitMix64 finalizer, used to derive independent seeds.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
