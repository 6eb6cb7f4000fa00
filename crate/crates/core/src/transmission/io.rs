//! CSV data sets with header `id,s1,s2,w_tilde,location`.
//!
//! Lines starting with `#` are comments; writers use them to record the
//! provenance of generated files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Observation;
use crate::error::{Result, SieveError};

/// A rejected input record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number in the input file.
    pub line: u64,
    pub id: Option<String>,
    pub reason: String,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| SieveError::Io(format!("{}: {e}", path.display())))
}

/// Reads every record, collecting malformed or invalid ones instead of
/// failing.
pub fn read_observations_lenient(
    path: impl AsRef<Path>,
) -> Result<(Vec<Observation>, Vec<RecordError>)> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| SieveError::Parse(format!("{}: {e}", path.display())))?
        .clone();
    for col in ["id", "s1", "s2", "w_tilde", "location"] {
        if !headers.iter().any(|h| h == col) {
            return Err(SieveError::Parse(format!(
                "{}: missing column `{col}`",
                path.display()
            )));
        }
    }
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                bad.push(RecordError {
                    line: e.position().map(|p| p.line()).unwrap_or(0),
                    id: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record
            .get(headers.iter().position(|h| h == "id").unwrap_or(0))
            .map(str::to_string);
        match record.deserialize::<Observation>(Some(&headers)) {
            Ok(o) => match o.validate() {
                Ok(()) => good.push(o),
                Err(e) => bad.push(RecordError {
                    line,
                    id,
                    reason: e.to_string(),
                }),
            },
            Err(e) => bad.push(RecordError {
                line,
                id,
                reason: e.to_string(),
            }),
        }
    }
    Ok((good, bad))
}

/// Reads a data set, failing on the first bad record.
pub fn read_observations(path: impl AsRef<Path>) -> Result<Vec<Observation>> {
    let (good, bad) = read_observations_lenient(path.as_ref())?;
    if let Some(e) = bad.first() {
        return Err(SieveError::Parse(format!(
            "{} line {}: {}",
            path.as_ref().display(),
            e.line,
            e.reason
        )));
    }
    Ok(good)
}

/// Writes a data set preceded by `# ` comment lines.
pub fn write_observations<W: Write>(
    out: W,
    data: &[Observation],
    comments: &[String],
) -> Result<()> {
    let mut out = out;
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    for o in data {
        w.serialize(o).map_err(|e| SieveError::Io(e.to_string()))?;
    }
    if data.is_empty() {
        w.write_record(["id", "s1", "s2", "w_tilde", "location"])
            .map_err(|e| SieveError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
