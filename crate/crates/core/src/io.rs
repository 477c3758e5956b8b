//! CSV input and output for datasets and benchmark traces.

use std::fs::File;
use std::path::Path;

use crate::data::{ObservationMatrix, TaskKind, TimeSeries};
use crate::error::{invalid, Error, Result};
use crate::quality::TraceRecord;

pub const TRACE_HEADER: [&str; 6] = ["method", "gamma", "iteration", "elapsed_seconds", "mean_width", "mean_rel_error"];

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), row, message: message.into() }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        other => parse_err(path, row, format!("{other:?}")),
    }
}

/// Numeric rows of a headerless-or-headed CSV. A first row containing any
/// non-numeric field is treated as a header. Row numbers in errors are
/// 1-based file lines.
fn read_numeric(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut rows = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if idx == 0 && parsed.iter().any(Option::is_none) {
            width = Some(record.len());
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(path, line, format!("expected {w} fields, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(w);
        for (field, v) in record.iter().zip(parsed) {
            match v {
                Some(x) if x.is_finite() => values.push(x),
                _ => return Err(parse_err(path, line, format!("not a finite number: {field:?}"))),
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "no data rows"));
    }
    Ok(rows)
}

/// Covariates in the leading columns, response in the last.
pub fn load_csv_dataset(path: impl AsRef<Path>, kind: TaskKind) -> Result<ObservationMatrix> {
    let path = path.as_ref();
    let rows = read_numeric(path)?;
    let w = rows[0].len();
    if w < 2 {
        return Err(parse_err(path, 1, "need at least one covariate column and a response column"));
    }
    let d = w - 1;
    let mut cov = Vec::with_capacity(rows.len() * d);
    let mut resp = Vec::with_capacity(rows.len());
    for row in &rows {
        cov.extend_from_slice(&row[..d]);
        resp.push(row[d]);
    }
    ObservationMatrix::new(cov, resp, d, kind)
}

/// One value per row, first column.
pub fn load_series_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let rows = read_numeric(path)?;
    if rows[0].len() != 1 {
        return Err(parse_err(path, 1, format!("expected a single column, found {}", rows[0].len())));
    }
    TimeSeries::new(rows.into_iter().map(|r| r[0]).collect())
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_dataset_csv(path: impl AsRef<Path>, data: &ObservationMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.row(i).iter().map(|&v| fmt(v)).collect();
        rec.push(fmt(data.response(i)));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["x"]).map_err(|e| csv_err(path, e))?;
    for &v in series.values() {
        w.write_record([fmt(v)]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// A trace row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub method: String,
    pub gamma: Option<f64>,
    pub iteration: usize,
    pub elapsed: f64,
    pub mean_width: f64,
    pub mean_rel_error: Option<f64>,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        Self {
            method: r.method.clone(),
            gamma: r.gamma,
            iteration: r.iteration,
            elapsed: r.elapsed,
            mean_width: r.quality.mean_value(),
            mean_rel_error: r.relative_error,
        }
    }
}

pub fn write_trace<W: std::io::Write>(out: W, trace: &[TraceRecord]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace.iter().map(TraceRow::from) {
        w.write_record([
            r.method,
            r.gamma.map(fmt).unwrap_or_default(),
            r.iteration.to_string(),
            fmt(r.elapsed),
            fmt(r.mean_width),
            r.mean_rel_error.map(fmt).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: impl AsRef<Path>, trace: &[TraceRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_trace(std::io::BufWriter::new(file), trace).map_err(|e| csv_err(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(parse_err(path, 1, format!("unexpected trace header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| parse_err(path, line, format!("bad number {:?}", &record[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>> { if record[i].is_empty() { Ok(None) } else { num(i).map(Some) } };
        rows.push(TraceRow {
            method: record[0].to_string(),
            gamma: opt(1)?,
            iteration: record[2].parse().map_err(|_| parse_err(path, line, "bad iteration"))?,
            elapsed: num(3)?,
            mean_width: num(4)?,
            mean_rel_error: opt(5)?,
        });
    }
    Ok(rows)
}

/// Renders a trace to a string, as written by [`write_trace`].
pub fn trace_to_string(trace: &[TraceRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).map_err(|e| invalid(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::QualityVector;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn header_detection() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_csv_dataset(write(&dir, "a.csv", "x1,x2,y\n1,2,3\n4,5,6\n"), TaskKind::Regression).unwrap();
        let b = load_csv_dataset(write(&dir, "b.csv", "1,2,3\n4,5,6\n"), TaskKind::Regression).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.d(), 2);
        assert_eq!(a.responses(), &[3.0, 6.0]);
    }

    #[test]
    fn bad_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.csv", "x,y\n1,2\n3,oops\n");
        match load_csv_dataset(&p, TaskKind::Regression) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let p = write(&dir, "ragged.csv", "1,2\n3\n");
        assert!(matches!(load_csv_dataset(&p, TaskKind::Regression), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn classification_labels_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "1,0\n2,1\n3,2\n");
        assert!(load_csv_dataset(&p, TaskKind::Classification).is_err());
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = ObservationMatrix::new(vec![0.1, 1.0 / 3.0, -2.5e-300, 7.0], vec![1e10, -0.2], 2, TaskKind::Regression)
            .unwrap();
        let p = dir.path().join("m.csv");
        write_dataset_csv(&p, &m).unwrap();
        assert_eq!(load_csv_dataset(&p, TaskKind::Regression).unwrap(), m);
        let s = TimeSeries::new(vec![std::f64::consts::PI, -1.0]).unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&p, &s).unwrap();
        assert_eq!(load_series_csv(&p).unwrap(), s);
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let q = QualityVector::ci_widths(vec![0.1, 0.2 / 3.0]);
        let trace = vec![
            TraceRecord {
                method: "blb".into(),
                gamma: Some(0.7),
                iteration: 1,
                elapsed: 0.25,
                quality: q.clone(),
                relative_error: Some(1.0 / 7.0),
            },
            TraceRecord { method: "boot".into(), gamma: None, iteration: 2, elapsed: 0.5, quality: q, relative_error: None },
        ];
        let p = dir.path().join("t.csv");
        write_trace_file(&p, &trace).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("method,gamma,iteration,elapsed_seconds,mean_width,mean_rel_error\n"));
        assert!(text.lines().nth(2).unwrap().starts_with("boot,,2,"));
        assert!(text.lines().nth(2).unwrap().ends_with(','));
        let rows = read_trace(&p).unwrap();
        let expect: Vec<TraceRow> = trace.iter().map(TraceRow::from).collect();
        assert_eq!(rows, expect);
    }
}
