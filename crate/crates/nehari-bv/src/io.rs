//! Text formats for fields and traces, content hashes, and atomic writes.
//!
//! Numbers are printed in the shortest form that reads back exactly, so a
//! field read back from CSV is bit-identical to the one written.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nehari_core::ground_state::TraceEntry;
use nehari_core::{DiscreteDomain, ScalarField};
use sha2::{Digest, Sha256};

use crate::error::{ConfigError, RunError};

/// One line per grid row `j = 0, …, ny−1`, cells `i = 0, …, nx−1`
/// separated by commas.
pub fn field_csv(u: &ScalarField) -> String {
    rows_csv(u.domain(), u.values())
}

/// Same layout as [`field_csv`] for raw per-cell values.
pub fn rows_csv(domain: &DiscreteDomain, values: &[f64]) -> String {
    let mut out = String::new();
    for j in 0..domain.ny() {
        for i in 0..domain.nx() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{:?}", values[domain.index(i, j)]).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Reads a field in the [`field_csv`] layout; the grid shape is taken from
/// the text and the cell side from `h`.
pub fn parse_field_csv(text: &str, h: f64) -> Result<ScalarField, ConfigError> {
    let mut values = Vec::new();
    let mut nx = None;
    let mut ny = 0;
    for (row, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                ConfigError::invalid("field", format!("line {}: `{}` is not a number", row + 1, cell.trim()))
            })?;
            values.push(v);
        }
        let width = values.len() - before;
        match nx {
            None => nx = Some(width),
            Some(n) if n != width => {
                return Err(ConfigError::invalid("field", format!("line {} has {width} cells, expected {n}", row + 1)))
            }
            Some(_) => {}
        }
        ny += 1;
    }
    let nx = nx.ok_or_else(|| ConfigError::invalid("field", "empty file"))?;
    let domain = DiscreteDomain::new(nx, ny, h).map_err(|e| ConfigError::invalid("field", e.to_string()))?;
    ScalarField::from_values(domain, values).map_err(|e| ConfigError::invalid("field", e.to_string()))
}

/// Plain (P2) greymap, 8 bits, min–max normalized, rows in the order of
/// [`field_csv`]. A constant field maps to black.
pub fn field_pgm(u: &ScalarField) -> String {
    let d = u.domain();
    let (lo, hi) = u.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let mut out = format!("P2\n{} {}\n255\n", d.nx(), d.ny());
    for j in 0..d.ny() {
        // Lines of at most 16 samples keep within the format's 70 columns.
        for (k, i) in (0..d.nx()).enumerate() {
            let v = u.get(i, j);
            let level = if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 };
            let sep = if k == 0 {
                ""
            } else if k % 16 == 0 {
                "\n"
            } else {
                " "
            };
            write!(out, "{sep}{level}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Descent log with header `restart,eps,iteration,psi`.
pub fn trace_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from("restart,eps,iteration,psi\n");
    for t in trace {
        writeln!(out, "{},{:?},{},{:?}", t.restart, t.eps, t.iteration, t.psi).expect("writing to a String");
    }
    out
}

/// Lower-case hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary file next to `path`, syncs it, then renames
/// it over `path`. Readers see either the old or the new file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(RunError::io(path, e));
    }
    Ok(())
}
