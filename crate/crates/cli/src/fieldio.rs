//! Field files: one sample per line (CSV) or packed little-endian `f64`
//! (binary), row-major, with a `<file>.json` sidecar holding `{dim, n, L}`.

use fracwave_core::spectral::{Field, Grid, GridParams};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Csv,
    Binary,
}

impl FieldFormat {
    /// `.bin` is binary, anything else CSV.
    pub fn from_path(path: &Path) -> FieldFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => FieldFormat::Binary,
            _ => FieldFormat::Csv,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FieldIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FieldIoError + '_ {
    move |source| FieldIoError::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> FieldIoError {
    FieldIoError::Format { path: path.to_path_buf(), message: message.into() }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// 17 significant digits, enough to parse back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn encode(field: &Field, format: FieldFormat) -> Vec<u8> {
    match format {
        FieldFormat::Csv => {
            let mut out = String::with_capacity(24 * field.samples().len());
            for v in field.samples() {
                out.push_str(&format_f64(*v));
                out.push('\n');
            }
            out.into_bytes()
        }
        FieldFormat::Binary => field.samples().iter().flat_map(|v| v.to_le_bytes()).collect(),
    }
}

pub fn sidecar_bytes(grid: &Grid) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(&GridParams::from(*grid)).expect("grid params serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn read_sidecar(path: &Path) -> Result<Grid, FieldIoError> {
    let side = sidecar_path(path);
    let bytes = fs::read(&side).map_err(io_err(&side))?;
    serde_json::from_slice::<Grid>(&bytes).map_err(|e| format_err(&side, e.to_string()))
}

fn decode(path: &Path, bytes: &[u8], format: FieldFormat) -> Result<Vec<f64>, FieldIoError> {
    match format {
        FieldFormat::Csv => {
            let text = std::str::from_utf8(bytes).map_err(|_| format_err(path, "not UTF-8"))?;
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    l.trim().parse::<f64>().map_err(|e| format_err(path, format!("line {}: {e}", i + 1)))
                })
                .collect()
        }
        FieldFormat::Binary => {
            if !bytes.len().is_multiple_of(8) {
                return Err(format_err(path, format!("{} bytes is not a whole number of f64", bytes.len())));
            }
            Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        }
    }
}

/// Reads a field and checks its sidecar against `expected`.
pub fn read_field(path: &Path, expected: &Grid) -> Result<Field, FieldIoError> {
    let grid = read_sidecar(path)?;
    let same = grid.dim() == expected.dim()
        && grid.n() == expected.n()
        && (grid.length() - expected.length()).abs() <= 1e-12 * expected.length();
    if !same {
        return Err(format_err(
            path,
            format!(
                "sidecar grid (dim {}, n {}, L {}) does not match (dim {}, n {}, L {})",
                grid.dim(),
                grid.n(),
                grid.length(),
                expected.dim(),
                expected.n(),
                expected.length()
            ),
        ));
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    let samples = decode(path, &bytes, FieldFormat::from_path(path))?;
    Field::new(*expected, samples).map_err(|e| format_err(path, e.to_string()))
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Writes the field and its sidecar; returns both paths.
pub fn write_field(path: &Path, field: &Field) -> Result<[PathBuf; 2], FieldIoError> {
    let side = sidecar_path(path);
    write_atomic(path, &encode(field, FieldFormat::from_path(path))).map_err(io_err(path))?;
    write_atomic(&side, &sidecar_bytes(field.grid())).map_err(io_err(&side))?;
    Ok([path.to_path_buf(), side])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> Field {
        let g = Grid::new(2, 8, 3.0).unwrap();
        Field::from_fn(g, |x| (x[0] * 1.3).sin() * (0.1 + x[1]).exp() / 7.0).unwrap()
    }

    #[test]
    fn csv_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, -0.0] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn both_formats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = field();
        for name in ["f.csv", "f.bin"] {
            let path = dir.path().join(name);
            write_field(&path, &f).unwrap();
            assert_eq!(read_field(&path, f.grid()).unwrap(), f);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field(&path, &field()).unwrap();
        let other = Grid::new(2, 8, 4.0).unwrap();
        let err = read_field(&path, &other).unwrap_err().to_string();
        assert!(err.contains("does not match"), "{err}");
    }

    #[test]
    fn truncated_binary_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let f = field();
        write_field(&path, &f).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_field(&path, f.grid()).is_err());
    }
}
