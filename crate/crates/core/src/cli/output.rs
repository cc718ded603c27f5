use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::spec::RunSpec;

/// Twelve significant digits, locale independent; absent values print `nan`.
pub fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{:.11e}", v + 0.0),
        _ => "nan".to_string(),
    }
}

pub fn csv_header(spec: &RunSpec) -> String {
    let mut out = format!("# command = {}\n", spec.command.name());
    for (k, v) in &spec.params {
        if k != "output" {
            let _ = writeln!(out, "# {k} = {v}");
        }
    }
    out
}

pub fn spec_json(spec: &RunSpec) -> Value {
    let params: Map<String, Value> = spec
        .params
        .iter()
        .filter(|(k, _)| k.as_str() != "output")
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    json!({ "command": spec.command.name(), "params": params })
}

pub fn opt(x: Option<f64>) -> Value {
    match x {
        Some(v) if v.is_finite() => json!(v),
        _ => Value::Null,
    }
}

/// Writes to `path` through a temporary sibling and a rename, or to stdout.
pub fn emit(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(content.as_bytes())?;
        return out.flush();
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| {
        std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name")
    })?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(content.as_bytes())?;
        f.sync_all()
    });
    if let Err(e) = result.and_then(|_| std::fs::rename(&tmp, path)) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e);
    }
    Ok(())
}
