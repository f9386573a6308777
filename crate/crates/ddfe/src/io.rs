//! File I/O conventions shared by every pipeline.
//!
//! * JSON and CSV floats are written with 17 significant digits, enough for
//!   a bit-exact `f64` round-trip, so re-running a pipeline on its own
//!   output reproduces the in-memory values exactly.
//! * All writes are atomic: content goes to a temporary file in the target
//!   directory which is then renamed over the destination. An interrupted
//!   run never leaves a truncated file at the final path.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// `f64` with 17 significant digits, e.g. `2.5000000000000000e-1`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // JSON has no non-finite numbers; emitters are expected to
            // clamp upstream, this is the safety net.
            write!(writer, "null")
        }
    }
}

/// Serialize to JSON with full-precision floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::InvalidParameter(format!("non-utf8 json: {e}")))
}

/// Atomically write `content` to `path` (temp file + rename).
pub fn atomic_write(path: &Path, content: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp: PathBuf = dir.map(Path::to_path_buf).unwrap_or_default();
    tmp.push(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, to_json_string(value)?.as_bytes())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })
}

/// Parse JSON with the source path and line carried into the error.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Parse one CSV line of floats; `line` is 1-based for error reporting.
pub fn parse_float_row(path: &Path, line: usize, text: &str, expected: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let vals = vals.map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line,
        message: format!("bad float: {e}"),
    })?;
    if vals.len() != expected {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("expected {expected} comma-separated values, got {}", vals.len()),
        });
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrips_bit_exactly() {
        for v in [
            0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -4.9e-324,
            f64::MIN_POSITIVE,
            f64::MAX,
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s} -> {back}");
        }
    }

    #[test]
    fn json_floats_use_17_digits() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        let s = to_json_string(&S { x: 0.1 }).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap().to_bits(), 0.1f64.to_bits());
    }

    #[test]
    fn atomic_write_replaces_and_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers.len(), 1, "temp files left behind: {leftovers:?}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_float_row(Path::new("data.csv"), 7, "1.0,zzz", 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("data.csv:7"), "{msg}");
    }
}
