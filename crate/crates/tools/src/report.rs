//! CSV reports. Each file starts with `# key=value` lines echoing the
//! resolved configuration, followed by a header row.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use five_core::{ExtractionReport, MetricReport};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

pub const EXTRACTION_COLUMNS: [&str; 4] = ["iteration", "nll", "head_residual", "wall_time_ms"];
pub const METRIC_COLUMNS: [&str; 7] = [
    "scene_id",
    "algorithm",
    "iterations",
    "si_sdr",
    "si_sir",
    "delta_si_sdr",
    "delta_si_sir",
];
pub const BENCH_COLUMNS: [&str; 5] = ["seed", "iteration", "runtime_per_input_second", "nll", "delta_si_sdr"];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub scene_id: String,
    pub algorithm: String,
    pub iterations: usize,
    pub metrics: MetricReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub seed: u64,
    pub iteration: usize,
    pub runtime_per_input_second: f64,
    pub nll: f64,
    pub delta_si_sdr: f64,
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

struct Sink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Sink {
    fn create(path: &Path, config: &[(String, String)], columns: &[&str]) -> Result<Self, ReportError> {
        let io = |source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = File::create(path).map_err(io)?;
        write_config_header(&mut file, config).map_err(io)?;
        let mut sink = Self {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(file),
        };
        sink.row(columns.iter().map(|s| s.to_string()))?;
        Ok(sink)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), ReportError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer.write_record(&fields).map_err(|source| ReportError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<(), ReportError> {
        self.writer.flush().map_err(|source| ReportError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

pub fn write_config_header(w: &mut impl Write, config: &[(String, String)]) -> io::Result<()> {
    for (k, v) in config {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

pub fn write_extraction_report(
    path: &Path,
    config: &[(String, String)],
    report: &ExtractionReport,
) -> Result<(), ReportError> {
    let mut sink = Sink::create(path, config, &EXTRACTION_COLUMNS)?;
    for r in &report.records {
        sink.row([
            r.iteration.to_string(),
            optional(r.nll),
            optional(r.head_residual),
            r.wall_time_ms.to_string(),
        ])?;
    }
    sink.finish()
}

fn metric_fields(row: &MetricRow) -> Vec<String> {
    vec![
        row.scene_id.clone(),
        row.algorithm.clone(),
        row.iterations.to_string(),
        row.metrics.si_sdr_db.to_string(),
        row.metrics.si_sir_db.to_string(),
        row.metrics.delta_si_sdr_db.to_string(),
        row.metrics.delta_si_sir_db.to_string(),
    ]
}

/// Appends one row; a new or empty file gets the config header and the
/// column row first.
pub fn append_metric_row(path: &Path, config: &[(String, String)], row: &MetricRow) -> Result<(), ReportError> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    if fresh {
        let mut sink = Sink::create(path, config, &METRIC_COLUMNS)?;
        sink.row(metric_fields(row))?;
        return sink.finish();
    }
    let file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let mut sink = Sink {
        path: path.to_path_buf(),
        writer: csv::Writer::from_writer(file),
    };
    sink.row(metric_fields(row))?;
    sink.finish()
}

pub fn write_bench_report(path: &Path, config: &[(String, String)], rows: &[BenchRow]) -> Result<(), ReportError> {
    let mut sink = Sink::create(path, config, &BENCH_COLUMNS)?;
    for r in rows {
        sink.row([
            r.seed.to_string(),
            r.iteration.to_string(),
            r.runtime_per_input_second.to_string(),
            r.nll.to_string(),
            r.delta_si_sdr.to_string(),
        ])?;
    }
    sink.finish()
}

/// Config header, column names and rows of a report file.
pub type ParsedReport = (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>);

pub fn read_report(path: &Path) -> Result<ParsedReport, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let columns = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok((config, columns, rows))
}
