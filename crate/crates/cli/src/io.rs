//! CSV and JSON artifacts. Every file starts with (or contains) the hash of
//! the configuration that produced it; CSV files carry it as a leading
//! `# config <hash>` comment line.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use tn_gsee::chebyshev::{MomentSequence, MomentSource};
use tn_gsee::{Error, Result};

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn header(hash: &str, columns: &str) -> String {
    format!("# config {hash}\n{columns}\n")
}

/// `k,mu,cos_err,trunc_err`. The errors of recursion step `s` belong to
/// the two moments it produces, `2s − 1` and `2s`; row 0 has zeros.
pub fn moments_csv(seq: &MomentSequence, hash: &str) -> String {
    let mut out = header(hash, "k,mu,cos_err,trunc_err");
    for (k, mu) in seq.moments.iter().enumerate() {
        let step = k.div_ceil(2);
        let (c, t) = if step == 0 {
            (0.0, 0.0)
        } else {
            (
                seq.cosine_errors.get(step - 1).copied().unwrap_or(0.0),
                seq.trunc_errors.get(step - 1).copied().unwrap_or(0.0),
            )
        };
        let _ = writeln!(out, "{k},{},{},{}", num(*mu), num(c), num(t));
    }
    out
}

/// `k,mu,source` with `source` either `computed` or `lp`.
pub fn extrapolated_csv(seq: &MomentSequence, hash: &str) -> String {
    let split = seq.split_index();
    let mut out = header(hash, "k,mu,source");
    for (k, mu) in seq.moments.iter().enumerate() {
        let src = if k <= split { "computed" } else { "lp" };
        let _ = writeln!(out, "{k},{},{src}", num(*mu));
    }
    out
}

pub fn cumulative_csv(trace: &[(f64, f64)], hash: &str) -> String {
    let mut out = header(hash, "x,C");
    for (x, c) in trace {
        let _ = writeln!(out, "{},{}", num(*x), num(*c));
    }
    out
}

/// Generic table writer.
pub fn table_csv(hash: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header(hash, &columns.join(","));
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte() as usize);
    Error::format(offset, format!("{}: {e}", path.display()))
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn parse_f64(path: &Path, field: &str, row: usize) -> Result<f64> {
    field.parse().map_err(|_| {
        Error::Parameter(format!("{}: row {row}: {field:?} is not a number", path.display()))
    })
}

/// Reads a moments table written by [`moments_csv`] or
/// [`extrapolated_csv`]. Rows must be ordered `k = 0, 1, 2, …`.
pub fn read_moments(path: &Path) -> Result<MomentSequence> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let ik = column(&headers, "k");
    let imu = column(&headers, "mu")
        .ok_or_else(|| Error::Parameter(format!("{}: no `mu` column", path.display())))?;
    let icos = column(&headers, "cos_err");
    let itr = column(&headers, "trunc_err");
    let isrc = column(&headers, "source");
    let mut moments = Vec::new();
    let mut cos = Vec::new();
    let mut trunc = Vec::new();
    let mut split = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if let Some(i) = ik {
            let k: usize = rec[i].parse().map_err(|_| {
                Error::Parameter(format!("{}: row {row}: bad index {:?}", path.display(), &rec[i]))
            })?;
            if k != row {
                return Err(Error::Parameter(format!(
                    "{}: expected k = {row}, found {k}",
                    path.display()
                )));
            }
        }
        moments.push(parse_f64(path, &rec[imu], row)?);
        if row > 0 && row % 2 == 0 {
            if let Some(i) = icos {
                cos.push(parse_f64(path, &rec[i], row)?);
            }
            if let Some(i) = itr {
                trunc.push(parse_f64(path, &rec[i], row)?);
            }
        }
        if let Some(i) = isrc {
            match &rec[i] {
                "computed" => {}
                "lp" => {
                    if split.is_none() {
                        split = Some(row.saturating_sub(1));
                    }
                }
                other => {
                    return Err(Error::Parameter(format!(
                        "{}: unknown source {other:?}",
                        path.display()
                    )))
                }
            }
        }
    }
    if moments.is_empty() {
        return Err(Error::Parameter(format!("{}: no moments", path.display())));
    }
    let mut seq = MomentSequence::from_moments(moments);
    seq.cosine_errors = cos;
    seq.trunc_errors = trunc;
    if let Some(split) = split {
        seq.source = MomentSource::Extrapolated { split };
    }
    Ok(seq)
}

/// Reads `x,C` pairs.
pub fn read_cumulative(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let (ix, ic) = match (column(&headers, "x"), column(&headers, "C")) {
        (Some(x), Some(c)) => (x, c),
        _ => return Err(Error::Parameter(format!("{}: expected x,C columns", path.display()))),
    };
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        out.push((parse_f64(path, &rec[ix], row)?, parse_f64(path, &rec[ic], row)?));
    }
    Ok(out)
}
