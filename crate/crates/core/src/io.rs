//! CSV ingestion and export of time series.
//!
//! Series files have the header `t,value`; `t` counts 1, 2, 3, ... and an
//! empty or `NA` value marks a missing observation.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::TimeSeriesData;

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v:?}")
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses series CSV from any reader; `path` only labels errors.
pub fn read_series<R: Read>(reader: R, path: &Path, period: usize) -> Result<TimeSeriesData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(parse_err(path, 1, "empty file"));
    }
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected header `t,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let expected = values.len() + 1;
        let t: usize = rec[0].parse().map_err(|_| {
            parse_err(
                path,
                line,
                format!("index `{}` is not a positive integer", &rec[0]),
            )
        })?;
        if t != expected {
            return Err(parse_err(
                path,
                line,
                format!("expected t = {expected}, found t = {t}"),
            ));
        }
        let raw = &rec[1];
        let v = if raw.is_empty() || raw == "NA" {
            None
        } else {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, line, format!("value `{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    line,
                    format!("value `{raw}` is not finite"),
                ));
            }
            Some(v)
        };
        values.push(v);
    }
    if values.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let label = path.file_stem().map_or_else(
        || "series".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    TimeSeriesData::new(values, period, label).map_err(|e| match e {
        Error::Data(m) | Error::Config(m) => Error::data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_series(path: &Path, period: usize) -> Result<TimeSeriesData> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(std::io::BufReader::new(f), path, period)
}

pub fn write_series_to<W: Write>(series: &TimeSeriesData, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["t", "value"]).map_err(csv_io)?;
    for (i, v) in series.values().iter().enumerate() {
        let cell = v.map_or_else(|| "NA".to_string(), fmt_f64);
        w.write_record([(i + 1).to_string(), cell])
            .map_err(csv_io)?;
    }
    w.flush().map_err(|e| Error::io("series", e))
}

pub fn write_series(series: &TimeSeriesData, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_series_to(series, std::io::BufWriter::new(f))
}

/// CSV writer with LF line endings.
pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::io("csv output", std::io::Error::other(e))
}

/// Writes a header and rows of already formatted cells to `path`.
pub fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv_writer(std::io::BufWriter::new(f));
    w.write_record(header).map_err(csv_io)?;
    for r in rows {
        w.write_record(&r).map_err(csv_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
