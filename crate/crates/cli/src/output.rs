//! Report writing. Every file lands via write-then-rename.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, Resolved};
use crate::Failure;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_vec_pretty(value).map_err(Failure::internal)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    config: &'a Resolved,
    report: &'a T,
}

/// Writes `<out>/<stem>.json` or `<out>/<stem>.csv` and returns the path.
///
/// CSV rows get a trailing `config` column holding the resolved config as JSON.
pub fn write_report<T: Serialize, R: Serialize>(
    cfg: &Resolved,
    stem: &str,
    report: &T,
    rows: &[R],
) -> Result<PathBuf, Failure> {
    match cfg.format {
        Format::Json => {
            let path = cfg.out.join(format!("{stem}.json"));
            write_json(&path, &Envelope { config: cfg, report })?;
            Ok(path)
        }
        Format::Csv => {
            let path = cfg.out.join(format!("{stem}.csv"));
            let config = serde_json::to_string(cfg).map_err(Failure::internal)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for (k, row) in rows.iter().enumerate() {
                let (header, mut values) = flatten(row)?;
                if k == 0 {
                    w.write_record(header.iter().map(String::as_str).chain(["config"]))
                        .map_err(Failure::internal)?;
                }
                values.push(config.clone());
                w.write_record(&values).map_err(Failure::internal)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::internal(e.to_string()))?;
            write_atomic(&path, &bytes)?;
            Ok(path)
        }
    }
}

/// Field names and rendered values of a flat struct, in declaration order.
fn flatten<R: Serialize>(row: &R) -> Result<(Vec<String>, Vec<String>), Failure> {
    let serde_json::Value::Object(fields) = serde_json::to_value(row).map_err(Failure::internal)? else {
        return Err(Failure::internal("CSV rows must be structs"));
    };
    Ok(fields
        .into_iter()
        .map(|(k, v)| {
            let text = match v {
                serde_json::Value::String(t) => t,
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            (k, text)
        })
        .unzip())
}
