use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::Failure;

/// Fail early if `path` cannot be created: its parent must be an existing directory.
pub fn check_writable(path: &Path) -> Result<(), Failure> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Failure::Usage(format!("output directory {} does not exist", parent.display())));
    }
    if path.is_dir() {
        return Err(Failure::Usage(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}

/// Write through a sibling temp file and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Usage(format!("bad output path {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let io = |e: std::io::Error| Failure::Numeric(format!("writing {}: {e}", path.display()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{name}.manifest.json"))
}

/// Record of one run: enough to replay it.
pub struct Manifest {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn to_value(&self) -> Value {
        let paths = |v: &[PathBuf]| v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
        json!({
            "command": self.command,
            "argv": std::env::args().collect::<Vec<_>>(),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "threads": rayon::current_num_threads(),
            "inputs": paths(&self.inputs),
            "outputs": paths(&self.outputs),
            "summary": self.summary,
        })
    }

    /// Next to the primary output when there is one, otherwise on stderr.
    pub fn emit(&self) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(&self.to_value()).expect("manifest serializes");
        match self.outputs.first() {
            Some(out) => write_atomic(&manifest_path(out), &(text + "\n")),
            None => {
                eprintln!("manifest: {}", serde_json::to_string(&self.to_value()).expect("manifest serializes"));
                Ok(())
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// CSV from a flat object (one row) or an array of flat objects (header from the first).
pub fn to_csv(v: &Value) -> String {
    let rows: Vec<&Map<String, Value>> = match v {
        Value::Object(m) => vec![m],
        Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
        _ => return format!("value\n{}\n", cell(v)),
    };
    let Some(first) = rows.first() else {
        return String::new();
    };
    let header: Vec<&String> = first.keys().collect();
    let mut out = header.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",") + "\n";
    for row in rows {
        let line: Vec<String> = header.iter().map(|k| row.get(*k).map(cell).unwrap_or_default()).collect();
        out += &line.join(",");
        out.push('\n');
    }
    out
}
