//! Artifact writing: every CSV gets a JSON sidecar with its provenance.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub const GIT_DESCRIBE: &str = env!("DICKE_GIT_DESCRIBE");

/// Provenance shared by every artifact of one run.
pub struct Provenance {
    pub command: &'static str,
    pub args: Value,
}

impl Provenance {
    pub fn metadata(&self, extra: Value) -> Value {
        let mut meta = json!({
            "command": self.command,
            "arguments": self.args,
            "program": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "git_describe": GIT_DESCRIBE,
        });
        if let (Some(m), Value::Object(e)) = (meta.as_object_mut(), extra) {
            m.extend(e);
        }
        meta
    }
}

/// Writes `rows` under `header` to `<dir>/<stem>.csv` and the metadata to
/// `<dir>/<stem>.json`; returns the CSV path.
pub fn write_table(
    dir: &Path,
    stem: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
    meta: &Value,
) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let mut out = BufWriter::new(fs::File::create(&csv)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    write_json(dir, stem, meta)?;
    Ok(csv)
}

pub fn write_json(dir: &Path, stem: &str, meta: &Value) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(meta).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
