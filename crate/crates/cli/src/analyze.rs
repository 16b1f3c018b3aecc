use serde_json::{json, Value};
use torus_riesz::energy::{energy_defect, laplacian_proxy_sum, theorem1_bound};
use torus_riesz::kernels::lemma1_check;
use torus_riesz::oracle::brute_quadrature_error;
use torus_riesz::spectral::{
    box_discrepancy_l2, extremal_band_limited, heat_discrepancy_l2, montgomery_margin, quadrature_worst_case,
    self_interaction_scale, spectral_sum,
};
use torus_riesz::torus::min_image_displacement;
use torus_riesz::{Error, KernelSpec, PointConfig};

use crate::args::{AnalyzeArgs, AnalyzeKind, Format};
use crate::output::{check_writable, to_csv, write_atomic, Manifest};
use crate::{read_config, to_pretty, Failure};

/// Closure tolerance relative to `max(worst case, N)`; near-optimal sets have
/// worst cases far below roundoff in the `N`-sized sums.
const CLOSURE_REL: f64 = 1e-10;

struct Report {
    json: Value,
    csv: String,
    /// Descriptions of failed exact checks.
    violations: Vec<String>,
}

impl Report {
    fn flat(json: Value) -> Self {
        let csv = to_csv(&json);
        Self {
            json,
            csv,
            violations: Vec::new(),
        }
    }
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("analyze {kind} requires --{flag}")))
}

fn parse_list(raw: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad number {p:?} in {raw:?}"))))
        .collect()
}

fn heat_time(raw: Option<&str>, c: &PointConfig) -> Result<f64, Failure> {
    match raw.unwrap_or("auto") {
        "auto" => Ok((c.n() as f64).powf(-2.0 / c.d() as f64)),
        other => other
            .parse()
            .map_err(|_| Failure::Usage(format!("--t expects a number or `auto`, got {other:?}"))),
    }
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn config(a: &AnalyzeArgs, kind: &str) -> Result<PointConfig, Failure> {
    read_config(&need(a.input.clone(), "in", kind)?)
}

fn build(a: &AnalyzeArgs) -> Result<Report, Failure> {
    Ok(match a.kind {
        AnalyzeKind::Spectral => {
            let c = config(a, "spectral")?;
            let p = spectral_sum(&c, need(a.x, "x", "spectral")?)?;
            Report {
                json: serde_json::to_value(&p).expect("profile serializes"),
                csv: p.to_csv(),
                violations: Vec::new(),
            }
        }
        AnalyzeKind::Montgomery => {
            let c = config(a, "montgomery")?;
            let x = need(a.x, "x", "montgomery")?;
            let margin = montgomery_margin(&c, x)?;
            let mut r = Report::flat(json!({"n": c.n(), "d": c.d(), "x": x, "margin": margin, "holds": margin >= 0.0}));
            if margin < 0.0 {
                r.violations.push(format!("Montgomery margin {margin:e} < 0 at X={x}"));
            }
            r
        }
        AnalyzeKind::Quadrature => {
            let c = config(a, "quadrature")?;
            let x = need(a.x, "x", "quadrature")?;
            let worst = quadrature_worst_case(&c, x)?;
            let brute = match extremal_band_limited(&c, x) {
                Ok(coeffs) => Some(brute_quadrature_error(&c, &coeffs)?),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let mut r = Report::flat(json!({"n": c.n(), "d": c.d(), "x": x, "worst_case": worst, "extremal_error": brute}));
            if let Some(b) = brute {
                if (b - worst).abs() > CLOSURE_REL * worst.max(c.n() as f64) {
                    r.violations.push(format!("extremal error {b:e} differs from worst case {worst:e}"));
                }
            }
            r
        }
        AnalyzeKind::Heat => {
            let c = config(a, "heat")?;
            let t = heat_time(a.t.as_deref(), &c)?;
            let h = heat_discrepancy_l2(&c, t)?;
            let normalized = h.value / (c.n() * c.n()) as f64;
            let mut json = serde_json::to_value(&h).expect("report serializes");
            json["normalized"] = json!(normalized);
            let mut r = Report::flat(json);
            if normalized < h.lower_bound_ref {
                r.violations.push(format!("value/N² = {normalized:e} below floor {:e}", h.lower_bound_ref));
            }
            r
        }
        AnalyzeKind::Box => {
            let c = config(a, "box")?;
            if a.a.is_empty() {
                return Err(Failure::Usage("analyze box requires --a".into()));
            }
            let b = box_discrepancy_l2(&c, &a.a, a.k)?;
            Report::flat(serde_json::to_value(&b).expect("report serializes"))
        }
        AnalyzeKind::Theorem1 => {
            let c = config(a, "theorem1")?;
            let s = need(a.s, "s", "theorem1")?;
            let spec = KernelSpec::riesz(c.d(), s);
            spec.validate()?;
            let (n, d) = (c.n() as f64, c.d() as f64);
            let x = n.powf(1.0 / d);
            let e = energy_defect(&c, &spec)?;
            let e_used = e.max(n.powf(1.0 + s / d));
            let total = spectral_sum(&c, x)?.total;
            let bound = theorem1_bound(&c, &spec, e_used)?;
            Report::flat(json!({
                "n": c.n(), "d": c.d(), "s": s, "x": x,
                "spectral_total": total,
                "energy_defect": e,
                "energy_used": e_used,
                "laplacian_proxy": laplacian_proxy_sum(&c, s)?,
                "bound": bound,
                "ratio": total / bound,
            }))
        }
        AnalyzeKind::Lemma1 => {
            let c = config(a, "lemma1")?;
            let s = need(a.s, "s", "lemma1")?;
            let ts = parse_list(a.t.as_deref().unwrap_or("1e-4,1e-3,1e-2"))?;
            let mut disps = Vec::new();
            for i in 0..c.n() {
                for j in 0..i {
                    disps.push(min_image_displacement(c.point(i), c.point(j))?.vector);
                }
            }
            let rep = lemma1_check(&KernelSpec::riesz(c.d(), s), &disps, &ts)?;
            let samples = serde_json::to_value(&rep.samples).expect("samples serialize");
            Report {
                csv: to_csv(&samples),
                json: serde_json::to_value(&rep).expect("report serializes"),
                violations: Vec::new(),
            }
        }
        AnalyzeKind::Selfscale => {
            let s = need(a.s, "s", "selfscale")?;
            let d = match (a.d, &a.input) {
                (Some(d), _) => d,
                (None, Some(p)) => read_config(p)?.d(),
                (None, None) => return Err(Failure::Usage("analyze selfscale requires --d or --in".into())),
            };
            let ts = match a.t.as_deref() {
                Some(raw) => parse_list(raw)?,
                None => log_spaced(1e-4, 1e-2, 9),
            };
            let rep = self_interaction_scale(&KernelSpec::riesz(d, s), &ts)?;
            let rows: Vec<Value> = rep.samples.iter().map(|(t, v)| json!({"t": t, "value": v})).collect();
            Report {
                csv: to_csv(&Value::Array(rows)),
                json: serde_json::to_value(&rep).expect("report serializes"),
                violations: Vec::new(),
            }
        }
    })
}

pub fn run(a: &AnalyzeArgs) -> Result<(), Failure> {
    if let Some(out) = &a.out {
        check_writable(out)?;
    }
    let mut report = build(a)?;
    let hash = match &a.input {
        Some(p) => Some(read_config(p)?.content_hash()),
        None => None,
    };
    if let Value::Object(map) = &mut report.json {
        map.insert("config_hash".into(), json!(hash));
    }
    let text = match a.format {
        Format::Json => to_pretty(&report.json),
        Format::Csv => report.csv.clone(),
    };
    let mut m = Manifest::new("analyze");
    m.inputs.extend(a.input.clone());
    m.summary = json!({
        "kind": format!("{:?}", a.kind).to_lowercase(),
        "config_hash": hash,
        "violations": report.violations,
    });
    match &a.out {
        Some(out) => {
            write_atomic(out, &text)?;
            m.outputs.push(out.clone());
            println!("wrote {}", out.display());
        }
        None => print!("{text}"),
    }
    m.emit()?;
    if a.assert && !report.violations.is_empty() {
        return Err(Failure::Assertion(report.violations.join("; ")));
    }
    Ok(())
}
