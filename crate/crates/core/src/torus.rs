//! Flat torus `T^d = (R/Z)^d`: canonical coordinates, the minimum-image
//! metric, and configuration generators.
//!
//! Coordinates are stored in the half-open cell `[0,1)^d`. Displacements use
//! the minimum-image representative with components in `(-1/2, 1/2]`; a
//! component at exactly `±1/2` is reported as `+1/2`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::splitmix64;

/// Provenance attached to a configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigMeta {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
}

impl ConfigMeta {
    pub fn new(generator: impl Into<String>) -> Self {
        Self {
            generator: generator.into(),
            seed: None,
            trace_id: None,
        }
    }

    fn seeded(generator: &str, seed: u64) -> Self {
        Self {
            generator: generator.into(),
            seed: Some(seed),
            trace_id: None,
        }
    }
}

/// `n` points on `T^d`, each coordinate in `[0,1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetFile", into = "PointSetFile")]
pub struct PointConfig {
    d: usize,
    coords: Vec<f64>,
    pub meta: ConfigMeta,
}

/// On-disk point-set layout.
#[derive(Serialize, Deserialize)]
struct PointSetFile {
    d: usize,
    n: usize,
    points: Vec<Vec<f64>>,
    #[serde(default)]
    meta: ConfigMeta,
}

impl TryFrom<PointSetFile> for PointConfig {
    type Error = Error;

    fn try_from(raw: PointSetFile) -> Result<Self> {
        if raw.points.len() != raw.n {
            return invalid(format!(
                "point set declares n = {} but has {} rows",
                raw.n,
                raw.points.len()
            ));
        }
        PointConfig::from_rows(raw.d, &raw.points, raw.meta)
    }
}

impl From<PointConfig> for PointSetFile {
    fn from(c: PointConfig) -> Self {
        PointSetFile {
            d: c.d,
            n: c.n(),
            points: c.iter().map(<[f64]>::to_vec).collect(),
            meta: c.meta,
        }
    }
}

impl PointConfig {
    /// Build from flat row-major coordinates that must already be canonical.
    pub fn new(d: usize, coords: Vec<f64>, meta: ConfigMeta) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if coords.is_empty() || coords.len() % d != 0 {
            return invalid(format!(
                "{} coordinates do not form a non-empty set of {d}-dimensional points",
                coords.len()
            ));
        }
        if let Some((idx, c)) = coords
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && (0.0..1.0).contains(*c)))
        {
            return invalid(format!(
                "coordinate {c} of point {} is not in [0,1)",
                idx / d
            ));
        }
        Ok(Self { d, coords, meta })
    }

    pub fn from_rows(d: usize, rows: &[Vec<f64>], meta: ConfigMeta) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return invalid(format!("row {bad} does not have {d} coordinates"));
        }
        Self::new(d, rows.concat(), meta)
    }

    /// Wrap arbitrary finite coordinates into the canonical cell.
    pub fn from_unwrapped(d: usize, mut coords: Vec<f64>, meta: ConfigMeta) -> Result<Self> {
        for c in coords.iter_mut() {
            *c = wrap_coord(*c)?;
        }
        Self::new(d, coords, meta)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    /// Flat row-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Translate every point by `shift` and re-wrap.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.d {
            return invalid("shift dimension mismatch");
        }
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| c + shift[i % self.d])
            .collect();
        Self::from_unwrapped(self.d, coords, self.meta.clone())
    }

    /// 64-bit fingerprint of the dimension and exact coordinate bits, as hex.
    /// Metadata does not enter.
    pub fn content_hash(&self) -> String {
        let h = self
            .coords
            .iter()
            .fold(splitmix64(self.d as u64), |h, c| splitmix64(h ^ c.to_bits()));
        format!("{h:016x}")
    }

    pub fn with_meta(mut self, meta: ConfigMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Minimum-image representative of `x - y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub vector: Vec<f64>,
    pub norm: f64,
}

impl Displacement {
    pub fn from_vector(vector: Vec<f64>) -> Self {
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { vector, norm }
    }
}

fn wrap_coord(c: f64) -> Result<f64> {
    if !c.is_finite() {
        return invalid(format!("non-finite coordinate {c}"));
    }
    let w = c - c.floor();
    // tiny negative inputs round up to exactly 1.0
    Ok(if w >= 1.0 { 0.0 } else { w })
}

/// Reduce coordinates modulo 1 into `[0,1)`.
pub fn wrap_point(p: &[f64]) -> Result<Vec<f64>> {
    p.iter().map(|&c| wrap_coord(c)).collect()
}

/// Reduce one difference component into `(-1/2, 1/2]`.
#[inline]
pub(crate) fn min_image_component(diff: f64) -> f64 {
    diff - (diff - 0.5).ceil()
}

/// Minimum-image representative of `x - y` in place.
#[inline]
pub(crate) fn min_image_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
        *o = min_image_component(a - b);
    }
}

/// Minimum-image displacement `x - y`.
pub fn min_image_displacement(x: &[f64], y: &[f64]) -> Result<Displacement> {
    if x.len() != y.len() {
        return invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        ));
    }
    let mut v = vec![0.0; x.len()];
    min_image_into(x, y, &mut v);
    Ok(Displacement::from_vector(v))
}

/// `m^d` points at `(j_1/m, ..., j_d/m)`, last coordinate fastest.
pub fn gen_grid(d: usize, m: usize) -> Result<PointConfig> {
    if d == 0 || m == 0 {
        return invalid("grid needs d >= 1 and m >= 1");
    }
    let n = u32::try_from(d)
        .ok()
        .and_then(|e| m.checked_pow(e))
        .filter(|n| n.checked_mul(d).is_some())
        .ok_or_else(|| Error::InvalidInput(format!("{m}^{d} grid points overflow")))?;
    let mut coords = Vec::with_capacity(n * d);
    let mut idx = vec![0usize; d];
    for _ in 0..n {
        coords.extend(idx.iter().map(|&j| j as f64 / m as f64));
        for axis in (0..d).rev() {
            idx[axis] += 1;
            if idx[axis] < m {
                break;
            }
            idx[axis] = 0;
        }
    }
    PointConfig::new(d, coords, ConfigMeta::new("grid"))
}

/// `n` i.i.d. uniform points from a ChaCha8 stream seeded with `seed`.
pub fn gen_random(d: usize, n: usize, seed: u64) -> Result<PointConfig> {
    if d == 0 || n == 0 {
        return invalid("random configuration needs d >= 1 and n >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointConfig::new(d, coords, ConfigMeta::seeded("random", seed))
}

/// Grid points displaced by independent uniform offsets in `[-jitter, jitter]^d`.
pub fn gen_perturbed_grid(d: usize, m: usize, jitter: f64, seed: u64) -> Result<PointConfig> {
    let max = 0.5 / m.max(1) as f64;
    if !(0.0..=max).contains(&jitter) {
        return invalid(format!("jitter {jitter} outside [0, 1/(2m)] = [0, {max}]"));
    }
    let grid = gen_grid(d, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = grid
        .coords()
        .iter()
        .map(|c| c + jitter * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    PointConfig::from_unwrapped(d, coords, ConfigMeta::seeded("jitter", seed))
}

/// `Some(m)` when `n = m^d` exactly.
pub fn perfect_root(n: usize, d: usize) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1)
        .find(|&m| m > 0 && u32::try_from(d).ok().and_then(|e| m.checked_pow(e)) == Some(n))
}
