//! Frozen reference values.
//!
//! Each fixture records the operation that produced it, its inputs and
//! settings, so it can be regenerated with [`generate`] (the CLI exposes this
//! as `torus-riesz fixtures`). Tests compare live computations against the
//! stored `value`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::energy::{energy_defect, pair_energy, theorem1_bound};
use crate::error::{invalid, Error, Result};
use crate::kernels::{condition3_residual, KernelSpec};
use crate::optimizer::{multi_start, OptimOptions};
use crate::oracle::direct_image_riesz_difference;
use crate::spectral::heat_floor;
use crate::torus::gen_grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub operation: String,
    pub inputs: Value,
    pub settings: Value,
    pub value: Value,
    pub produced_by_version: String,
}

impl Fixture {
    fn new(operation: &str, inputs: Value, settings: Value, value: Value) -> Self {
        Self {
            operation: operation.into(),
            inputs,
            settings,
            value,
            produced_by_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// The value as a single number.
    pub fn scalar(&self) -> Result<f64> {
        self.value
            .as_f64()
            .ok_or_else(|| Error::InvalidInput(format!("fixture {} is not scalar", self.operation)))
    }
}

/// Fixture names; each is stored as `<name>.json`.
pub const NAMES: &[&str] = &[
    "riesz_difference_d1",
    "theorem1_bound_grid8",
    "heat_floor",
    "riesz_sweep_energy_constant",
    "gaussian_grid_energy_constant",
    "condition3_antipode",
];

/// Sizes of the one-dimensional riesz sweep (`s = 1/2`).
pub const RIESZ_SWEEP_NS: [usize; 4] = [8, 16, 32, 64];
/// Sizes of the two-dimensional gaussian sweep (`β = N`).
pub const GAUSSIAN_SWEEP_NS: [usize; 4] = [16, 36, 64, 100];
/// `(n, d)` pairs for which heat floors are frozen.
pub const HEAT_FLOOR_CASES: [(usize, usize); 6] = [(8, 1), (12, 1), (16, 1), (9, 2), (12, 2), (16, 2)];

/// Multi-start settings shared by the sweeps and their fixtures.
pub fn sweep_options() -> OptimOptions {
    OptimOptions {
        restarts: 8,
        seed: 1,
        ..Default::default()
    }
}

pub fn generate(name: &str) -> Result<Fixture> {
    match name {
        "riesz_difference_d1" => {
            let v = direct_image_riesz_difference(&[0.25], &[0.5], 0.5, 400)?;
            Ok(Fixture::new(
                "direct_image_riesz_difference",
                json!({"x": [0.25], "y": [0.5], "s": 0.5}),
                json!({"image_radius": 400, "tail_estimate": v.tail_estimate}),
                json!(v.value),
            ))
        }
        "theorem1_bound_grid8" => {
            let spec = KernelSpec::riesz(1, 0.5);
            let grid = gen_grid(1, 8)?;
            let e = energy_defect(&grid, &spec)?;
            let v = theorem1_bound(&grid, &spec, e)?;
            Ok(Fixture::new(
                "theorem1_bound",
                json!({"config": "gen_grid(1, 8)", "kernel": spec, "E": e}),
                json!({}),
                json!(v),
            ))
        }
        "heat_floor" => {
            let rows: Vec<Value> = HEAT_FLOOR_CASES
                .iter()
                .map(|&(n, d)| {
                    let t = (n as f64).powf(-2.0 / d as f64);
                    json!({"n": n, "d": d, "t": t, "floor": heat_floor(n, d, t)})
                })
                .collect();
            Ok(Fixture::new(
                "heat_floor",
                json!({"cases": HEAT_FLOOR_CASES}),
                json!({"t": "N^(-2/d)", "X": "ceil(2 N^(1/d))"}),
                Value::Array(rows),
            ))
        }
        "riesz_sweep_energy_constant" => {
            let spec = KernelSpec::riesz(1, 0.5);
            let opts = sweep_options();
            let mut ratios = Vec::new();
            for &n in &RIESZ_SWEEP_NS {
                let r = multi_start(1, n, &spec, &opts)?;
                ratios.push(r.energy().abs() / (n as f64).powf(1.5));
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            Ok(Fixture::new(
                "max |E| / N^(1+s/d) over multi_start optima",
                json!({"d": 1, "s": 0.5, "ns": RIESZ_SWEEP_NS, "ratios": ratios}),
                json!(opts),
                json!(max),
            ))
        }
        "gaussian_grid_energy_constant" => {
            let mut ratios = Vec::new();
            for &n in &GAUSSIAN_SWEEP_NS {
                let m = (n as f64).sqrt().round() as usize;
                let e = pair_energy(&gen_grid(2, m)?, &KernelSpec::gaussian(2, n as f64))?;
                ratios.push(e / n as f64);
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            Ok(Fixture::new(
                "max pair_energy(grid) / N, gaussian beta = N",
                json!({"d": 2, "ns": GAUSSIAN_SWEEP_NS, "ratios": ratios}),
                json!({}),
                json!(max),
            ))
        }
        "condition3_antipode" => {
            let spec = KernelSpec::riesz(1, 0.5);
            let v = condition3_residual(&spec, &[0.5], 1e-3, 10.0)?;
            Ok(Fixture::new(
                "condition3_residual",
                json!({"x": [0.5], "kernel": spec, "t": 1e-3, "c2": 10.0}),
                json!({}),
                json!(v),
            ))
        }
        other => invalid(format!("unknown fixture {other:?}")),
    }
}

/// Regenerate every fixture into `dir`.
pub fn write_all(dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for name in NAMES {
        let path = dir.join(format!("{name}.json"));
        let tmp = dir.join(format!(".{name}.json.tmp"));
        std::fs::write(&tmp, generate(name)?.to_json()?)?;
        std::fs::rename(&tmp, &path)?;
        written.push(path);
    }
    Ok(written)
}
