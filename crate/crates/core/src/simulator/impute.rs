//! Exposure windows for real-data records.
//!
//! Records carry absolute onset times and optional window bounds. Missing
//! window starts default to `DEFAULT_LOOKBACK` days before the infector's
//! onset; the window ends no later than either onset or the end of the
//! infectee's own exposure window. Times are then shifted so the window
//! starts at 0.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SieveError};
use crate::transmission::{Observation, RecordError};

/// Days before the infector's onset assumed when no window start is given.
pub const DEFAULT_LOOKBACK: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub s1: f64,
    pub s2: f64,
    pub window_start: Option<f64>,
    pub window_end: Option<f64>,
    pub second_window_end: Option<f64>,
    pub location: u32,
    /// Line in the source file, 0 when not read from a file.
    #[serde(skip)]
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeOutcome {
    pub observations: Vec<Observation>,
    pub rejected: Vec<RecordError>,
}

fn impute_one(r: &RawRecord) -> std::result::Result<Observation, String> {
    for (name, v) in [("s1", r.s1), ("s2", r.s2)] {
        if !v.is_finite() {
            return Err(format!("{name} is not finite"));
        }
    }
    let start = r.window_start.unwrap_or(r.s1 - DEFAULT_LOOKBACK);
    let mut end = r.s1.min(r.s2);
    if let Some(e) = r.window_end {
        end = end.min(e);
    }
    if let Some(e) = r.second_window_end {
        end = end.min(e);
    }
    if !start.is_finite() || !end.is_finite() {
        return Err("window bounds are not finite".into());
    }
    if r.s1 < start {
        return Err(format!("s1 = {} precedes the window start {start}", r.s1));
    }
    if r.s2 < start {
        return Err(format!("s2 = {} precedes the window start {start}", r.s2));
    }
    if end < start {
        return Err(format!(
            "window end {end} precedes the window start {start}"
        ));
    }
    let o = Observation::new(
        r.id.clone(),
        r.s1 - start,
        r.s2 - start,
        end - start,
        r.location,
    );
    o.validate().map_err(|e| e.to_string())?;
    Ok(o)
}

/// Completes and normalizes windows; rejected records come back with the
/// reason.
pub fn impute_windows(raw: &[RawRecord]) -> ImputeOutcome {
    let mut observations = Vec::new();
    let mut rejected = Vec::new();
    for r in raw {
        match impute_one(r) {
            Ok(o) => observations.push(o),
            Err(reason) => rejected.push(RecordError {
                line: r.line,
                id: Some(r.id.clone()),
                reason,
            }),
        }
    }
    ImputeOutcome {
        observations,
        rejected,
    }
}

#[derive(Deserialize)]
struct RawRow {
    id: String,
    s1: f64,
    s2: f64,
    #[serde(default)]
    window_start: Option<f64>,
    #[serde(default)]
    window_end: Option<f64>,
    #[serde(default)]
    second_window_end: Option<f64>,
    location: u32,
}

/// Reads `id,s1,s2,window_start,window_end,second_window_end,location`
/// (window columns may be empty or absent).
pub fn read_raw_records(path: impl AsRef<Path>) -> Result<(Vec<RawRecord>, Vec<RecordError>)> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| SieveError::Io(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| SieveError::Parse(format!("{}: {e}", path.display())))?
        .clone();
    for col in ["id", "s1", "s2", "location"] {
        if !headers.iter().any(|h| h == col) {
            return Err(SieveError::Parse(format!(
                "{}: missing column `{col}`",
                path.display()
            )));
        }
    }
    let id_col = headers.iter().position(|h| h == "id");
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
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
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        match rec.deserialize::<RawRow>(Some(&headers)) {
            Ok(r) => good.push(RawRecord {
                id: r.id,
                s1: r.s1,
                s2: r.s2,
                window_start: r.window_start,
                window_end: r.window_end,
                second_window_end: r.second_window_end,
                location: r.location,
                line,
            }),
            Err(e) => bad.push(RecordError {
                line,
                id: id_col.and_then(|i| rec.get(i)).map(str::to_string),
                reason: e.to_string(),
            }),
        }
    }
    Ok((good, bad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(
        s1: f64,
        s2: f64,
        start: Option<f64>,
        end: Option<f64>,
        second: Option<f64>,
    ) -> RawRecord {
        RawRecord {
            id: "r".into(),
            s1,
            s2,
            window_start: start,
            window_end: end,
            second_window_end: second,
            location: 0,
            line: 0,
        }
    }

    #[test]
    fn full_window_passes_through_shifted() {
        let out = impute_windows(&[raw(12.0, 15.0, Some(5.0), Some(9.0), None)]);
        assert_eq!(
            out.observations,
            vec![Observation::new("r", 7.0, 10.0, 4.0, 0)]
        );
    }

    #[test]
    fn missing_start_uses_lookback() {
        let out = impute_windows(&[raw(70.0, 75.0, None, None, None)]);
        let o = &out.observations[0];
        assert_eq!(o.s1, 60.0);
        assert_eq!(o.s2, 65.0);
        assert_eq!(o.w_tilde, 60.0);
    }

    #[test]
    fn early_infectee_onset_closes_the_window() {
        let out = impute_windows(&[raw(70.0, 65.0, None, None, None)]);
        assert_eq!(out.observations[0].w_tilde, 55.0);
        let out = impute_windows(&[raw(70.0, 75.0, None, None, Some(40.0))]);
        assert_eq!(out.observations[0].w_tilde, 30.0);
    }

    #[test]
    fn rejects_onsets_before_the_window() {
        let out = impute_windows(&[raw(3.0, 9.0, Some(5.0), None, None)]);
        assert!(out.observations.is_empty());
        assert_eq!(out.rejected.len(), 1);
        let out = impute_windows(&[raw(8.0, 9.0, Some(5.0), None, Some(4.0))]);
        assert_eq!(out.rejected.len(), 1);
    }

    #[test]
    fn raw_csv_with_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        std::fs::write(
            &path,
            "id,s1,s2,window_start,window_end,second_window_end,location\n\
             a,70,75,,,,1\nb,12,15,5,9,,0\nc,zz,1,,,,0\n",
        )
        .unwrap();
        let (good, bad) = read_raw_records(&path).unwrap();
        assert_eq!(good.len(), 2);
        assert_eq!(good[0].window_start, None);
        assert_eq!(good[1].window_end, Some(9.0));
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].line, 4);
    }
}
