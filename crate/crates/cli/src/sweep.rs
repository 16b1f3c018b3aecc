use serde_json::{json, Map, Value};
use torus_riesz::energy::{log_log_slope, EnergyReport};
use torus_riesz::optimizer::multi_start;
use torus_riesz::spectral::{cross_energy_experiment, spectral_sum};
use torus_riesz::{KernelFamily, KernelSpec};

use crate::args::{Experiment, Format, SweepArgs};
use crate::output::{check_writable, to_csv, write_atomic, Manifest};
use crate::{to_pretty, Failure};

fn row(a: &SweepArgs, n: usize) -> Result<Value, Failure> {
    let spec = a.kernel.spec(a.d, n)?;
    let opts = a.optim.options()?;
    let best = multi_start(a.d, n, &spec, &opts)?;
    let report = EnergyReport::compute(&best.config, &spec)?;
    let x = (n as f64).powf(1.0 / a.d as f64).ceil();
    let total = spectral_sum(&best.config, x)?.total;
    let mut r = json!({
        "n": n,
        "converged": best.converged,
        "pair_energy": report.pair_energy,
        "defect_E": report.defect_e,
        "grad_norm": report.grad_norm,
        "laplacian_proxy": report.laplacian_proxy,
        "x": x,
        "spectral_total": total,
        "spectral_ratio": total / (n * n) as f64,
        "error": null,
    });
    if spec.family == KernelFamily::Gaussian {
        r["beta"] = json!(spec.beta());
    }
    if a.experiment == Some(Experiment::CrossEnergy) {
        let s = a.kernel.s.ok_or_else(|| Failure::Usage("--experiment cross-energy requires --s".into()))?;
        let t = a.t.ok_or_else(|| Failure::Usage("--experiment cross-energy requires --t".into()))?;
        let c = cross_energy_experiment(&best.config, s, t)?;
        for (k, v) in [("e_s", c.e_s), ("e_t", c.e_t), ("ratio_s", c.ratio_s), ("ratio_t", c.ratio_t)] {
            r[k] = json!(v);
        }
    }
    Ok(r)
}

fn fit(rows: &[Value], key: &str, abs: bool, expected: Option<f64>) -> Option<Value> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r["error"].is_null())
        .filter_map(|r| {
            let y = r[key].as_f64()?;
            let y = if abs { y.abs() } else { y };
            (y > 0.0).then(|| (r["n"].as_f64().unwrap_or(0.0), y))
        })
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    log_log_slope(&xs, &ys)
        .ok()
        .map(|slope| json!({"slope": slope, "expected": expected, "points": xs.len()}))
}

pub fn run(a: &SweepArgs) -> Result<(), Failure> {
    check_writable(&a.out)?;
    // flag errors surface before any optimization
    let spec: KernelSpec = a.kernel.spec(a.d, a.ns[0])?;
    let opts = a.optim.options()?;
    let mut rows = Vec::with_capacity(a.ns.len());
    for &n in &a.ns {
        match row(a, n) {
            Ok(r) => rows.push(r),
            Err(Failure::Usage(m)) => return Err(Failure::Usage(m)),
            Err(e) => rows.push(json!({"n": n, "error": e.to_string()})),
        }
    }
    let failed = rows.iter().filter(|r| !r["error"].is_null()).count();
    let mut slopes = Map::new();
    if spec.family == KernelFamily::Riesz {
        let (d, s) = (a.d as f64, spec.s());
        slopes.extend(fit(&rows, "defect_E", true, Some(1.0 + s / d)).map(|v| ("defect_E".into(), v)));
        slopes.extend(fit(&rows, "laplacian_proxy", false, Some((d + s + 2.0) / d)).map(|v| ("laplacian_proxy".into(), v)));
    } else {
        slopes.extend(fit(&rows, "defect_E", true, None).map(|v| ("defect_E".into(), v)));
    }
    slopes.extend(fit(&rows, "spectral_total", false, Some(2.0)).map(|v| ("spectral_total".into(), v)));
    let report = json!({"kernel": spec, "options": opts, "rows": rows, "slopes": slopes});
    let text = match a.format {
        Format::Json => to_pretty(&report),
        Format::Csv => to_csv(&report["rows"]),
    };
    write_atomic(&a.out, &text)?;
    for (k, v) in &slopes {
        println!("slope {k}: {:.4} (expected {})", v["slope"].as_f64().unwrap_or(f64::NAN), v["expected"]);
    }
    println!("rows={} failed={failed} path={}", rows.len(), a.out.display());
    let mut m = Manifest::new("sweep");
    m.seed = Some(opts.seed);
    m.outputs.push(a.out.clone());
    m.summary = json!({"rows": rows.len(), "failed": failed, "slopes": slopes});
    m.emit()?;
    if failed == rows.len() {
        return Err(Failure::Numeric("every sweep row failed".into()));
    }
    Ok(())
}
