//! Frame and measurement file formats.
//!
//! * Frame CSV: one vector per line, comma separated, `.` as decimal point.
//!   Blank lines and lines starting with `#` are ignored.
//! * Frame JSON: `{"m": 3, "vectors": [[1, 1, 1], ...]}`.
//! * Measurements: one nonnegative decimal per line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, MeasurementVector, Tolerance};

#[derive(Debug, Serialize, Deserialize)]
struct FrameJson {
    m: usize,
    vectors: Vec<Vec<f64>>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(token: &str, line: usize) -> Result<f64> {
    let t = token.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid number {t:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite number {t:?}")));
    }
    Ok(v)
}

pub fn parse_frame_csv(text: &str, tol: Tolerance) -> Result<Frame> {
    let mut vectors = Vec::new();
    for (line, l) in content_lines(text) {
        let row = l
            .split(',')
            .map(|t| parse_number(t, line))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = vectors.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Parse(format!(
                    "line {line}: expected {first} entries, found {}",
                    row.len()
                )));
            }
        }
        vectors.push(row);
    }
    Frame::with_tolerance(vectors, tol)
}

pub fn parse_frame_json(text: &str, tol: Tolerance) -> Result<Frame> {
    let parsed: FrameJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(v) = parsed.vectors.iter().find(|v| v.len() != parsed.m) {
        return Err(Error::Parse(format!(
            "declared m = {} but a vector has length {}",
            parsed.m,
            v.len()
        )));
    }
    Frame::with_tolerance(parsed.vectors, tol)
}

/// Parses JSON when the text starts with `{`, CSV otherwise.
pub fn parse_frame(text: &str, tol: Tolerance) -> Result<Frame> {
    if text.trim_start().starts_with('{') {
        parse_frame_json(text, tol)
    } else {
        parse_frame_csv(text, tol)
    }
}

pub fn load_frame(path: &Path, tol: Tolerance) -> Result<Frame> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_frame(&text, tol)
}

pub fn frame_to_json(frame: &Frame) -> String {
    serde_json::to_string(&FrameJson {
        m: frame.dim(),
        vectors: frame.vectors().to_vec(),
    })
    .expect("frame serialization cannot fail")
}

/// Parses one value per line. With `squared == false` the values are
/// magnitudes `|<x, phi_i>|` and are squared on ingest.
pub fn parse_measurements(text: &str, squared: bool) -> Result<MeasurementVector> {
    let values = content_lines(text)
        .map(|(line, l)| parse_number(l, line))
        .collect::<Result<Vec<_>>>()?;
    if squared {
        MeasurementVector::new(values)
    } else {
        MeasurementVector::from_magnitudes(&values)
    }
}

pub fn load_measurements(path: &Path, squared: bool) -> Result<MeasurementVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_measurements(&text, squared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let tol = Tolerance::default();
        let a = parse_frame("# r2\n1,1\n1.0,-1\n\n", tol).unwrap();
        let b = parse_frame(r#"{"m": 2, "vectors": [[1, 1], [1, -1]]}"#, tol).unwrap();
        assert_eq!(a, b);
        let round = parse_frame(&frame_to_json(&a), tol).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn csv_errors() {
        let tol = Tolerance::default();
        assert!(matches!(parse_frame("1,2\n3\n", tol), Err(Error::Parse(_))));
        assert!(matches!(parse_frame("1,2\n3,x\n", tol), Err(Error::Parse(_))));
        assert!(matches!(parse_frame("1,2\n3,inf\n", tol), Err(Error::Parse(_))));
        // comma decimal separators are not accepted
        assert!(parse_frame("1,5;2\n", tol).is_err());
        assert_eq!(parse_frame("", tol), Err(Error::EmptyFrame));
        assert!(matches!(
            parse_frame(r#"{"m": 3, "vectors": [[1, 1]]}"#, tol),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn measurement_files() {
        let y = parse_measurements("64\n4.0\n", true).unwrap();
        assert_eq!(y.values(), &[64.0, 4.0]);
        let y = parse_measurements("8\n2\n", false).unwrap();
        assert_eq!(y.values(), &[64.0, 4.0]);
        assert!(matches!(
            parse_measurements("1\n-2\n", true),
            Err(Error::NegativeMeasurement { index: 1, .. })
        ));
        assert!(parse_measurements("1\n-2\n", false).is_err());
    }
}
