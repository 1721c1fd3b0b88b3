//! Series CSV format and float formatting shared by all emitted files.

use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

use crate::series::{SeriesError, TimeSeries};

/// Format a float with 17 significant digits (scientific), enough to
/// round-trip any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: expected header 't,y', got '{found}'")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: {message}")]
    BadRow { line: usize, message: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Write a series as two-column CSV with header `t,y`. An empty series
/// produces just the header.
pub fn write_series<W: Write>(w: &mut W, series: &TimeSeries) -> std::io::Result<()> {
    writeln!(w, "t,y")?;
    for (t, y) in series.times().iter().zip(series.values()) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*y))?;
    }
    Ok(())
}

pub fn write_series_file(path: &Path, series: &TimeSeries) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_series(&mut file, series)
}

/// Parse a `t,y` CSV. Errors name the offending 1-based line. A file with a
/// header and no rows parses to the empty placeholder series.
pub fn read_series<R: BufRead>(r: R) -> Result<TimeSeries, CsvError> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut lines = r.lines().enumerate();

    match lines.next() {
        Some((_, Ok(header))) if header.trim_end() == "t,y" => {}
        Some((_, Ok(found))) => {
            return Err(CsvError::BadHeader {
                line: 1,
                found: found.trim_end().to_string(),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(CsvError::BadHeader {
            line: 1,
            found: String::new(),
        }),
    }

    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (t_str, y_str) = line.split_once(',').ok_or_else(|| CsvError::BadRow {
            line: line_no,
            message: "expected two comma-separated fields".into(),
        })?;
        let parse = |name: &str, s: &str| -> Result<f64, CsvError> {
            let v: f64 = s.trim().parse().map_err(|e| CsvError::BadRow {
                line: line_no,
                message: format!("invalid {name} '{s}': {e}"),
            })?;
            if !v.is_finite() {
                return Err(CsvError::BadRow {
                    line: line_no,
                    message: format!("{name} must be finite, got '{s}'"),
                });
            }
            Ok(v)
        };
        times.push(parse("t", t_str)?);
        values.push(parse("y", y_str)?);
    }

    if times.is_empty() {
        return Ok(TimeSeries::empty());
    }
    Ok(TimeSeries::new(times, values)?)
}

pub fn read_series_file(path: &Path) -> Result<TimeSeries, CsvError> {
    read_series(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let series = TimeSeries::new(
            vec![0.0, 0.1, 0.2, 99.9],
            vec![5.1, -4.9, 1.0 / 3.0, f64::MIN_POSITIVE],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &series).unwrap();
        let parsed = read_series(&buf[..]).unwrap();
        assert_eq!(parsed, series);
    }

    #[test]
    fn empty_series_round_trips() {
        let mut buf = Vec::new();
        write_series(&mut buf, &TimeSeries::empty()).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "t,y\n");
        assert!(read_series(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn bad_header_named() {
        let err = read_series("time,value\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::BadHeader { line: 1, .. }));
    }

    #[test]
    fn bad_row_names_line() {
        let err = read_series("t,y\n0.0,1.0\nbogus\n".as_bytes()).unwrap_err();
        match err {
            CsvError::BadRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = read_series("t,y\n0.0,notanumber\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::BadRow { line: 2, .. }));
        let err = read_series("t,y\n0.0,inf\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::BadRow { line: 2, .. }));
    }

    #[test]
    fn non_monotonic_file_rejected() {
        let err = read_series("t,y\n1.0,0.0\n0.5,0.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::Series(_)));
    }
}
