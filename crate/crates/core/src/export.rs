//! CSV export of named column series, and the schedule CSV reader.

use std::io::{Read, Write};

use thiserror::Error;

use crate::dynamics::Populations;
use crate::pulse::Waveform;
use crate::schedule::{make_sampled, DetuningSchedule, ScheduleError};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("column '{name}' has {got} rows, expected {expected}")]
    ColumnMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{0} headers for {1} columns")]
    HeaderMismatch(usize, usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad schedule csv: {0}")]
    Parse(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Named, equal-length columns of floats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Series {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(mut self, name: &str, values: Vec<f64>) -> Self {
        self.names.push(name.to_owned());
        self.columns.push(values);
        self
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    fn check(&self) -> Result<(), ExportError> {
        if self.names.len() != self.columns.len() {
            return Err(ExportError::HeaderMismatch(self.names.len(), self.columns.len()));
        }
        let expected = self.rows();
        for (name, col) in self.names.iter().zip(&self.columns) {
            if col.len() != expected {
                return Err(ExportError::ColumnMismatch {
                    name: name.clone(),
                    expected,
                    got: col.len(),
                });
            }
        }
        Ok(())
    }
}

/// 17 significant digits, so values survive a text round trip.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn export_csv<W: Write>(series: &Series, out: W) -> Result<(), ExportError> {
    series.check()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&series.names)?;
    for i in 0..series.rows() {
        w.write_record(series.columns.iter().map(|c| format_float(c[i])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_bytes(series: &Series) -> Result<Vec<u8>, ExportError> {
    let mut buf = Vec::new();
    export_csv(series, &mut buf)?;
    Ok(buf)
}

pub fn populations_series(p: &Populations<f64>) -> Series {
    Series::new()
        .column("t", p.times.clone())
        .column("p_e", p.emitter.clone())
        .column("p_t", p.target.clone())
        .column("p_l", p.left.clone())
        .column("p_r", p.right.clone())
        .column("p_cont", p.continuum.clone())
}

/// Columns t, re_f, im_f, abs2_f, phase (phase wrapped to (−π, π]).
pub fn waveform_series(w: &Waveform<f64>) -> Series {
    Series::new()
        .column("t", w.times.clone())
        .column("re_f", w.amplitudes.iter().map(|z| z.re).collect())
        .column("im_f", w.amplitudes.iter().map(|z| z.im).collect())
        .column("abs2_f", w.amplitudes.iter().map(|z| z.norm_sqr()).collect())
        .column("phase", w.amplitudes.iter().map(|z| z.arg()).collect())
}

/// Columns t, delta. Sampled schedules export their own samples; other
/// kinds are tabulated on `times`.
pub fn schedule_series(s: &DetuningSchedule<f64>, times: &[f64]) -> Series {
    let (t, d): (Vec<f64>, Vec<f64>) = match s.samples() {
        Some(curve) => curve.pairs().unzip(),
        None => times.iter().map(|&t| (t, s.eval(t))).unzip(),
    };
    Series::new().column("t", t).column("delta", d)
}

/// Reads a `t,delta` CSV back into a sampled schedule.
pub fn read_schedule_csv<R: Read>(input: R) -> Result<DetuningSchedule<f64>, ExportError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ExportError::Parse(format!("missing column '{name}'")))
    };
    let (it, id) = (col("t")?, col("delta")?);
    let mut pairs = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64, ExportError> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| ExportError::Parse(format!("row {}: {e}", line + 1)))
        };
        pairs.push((field(it)?, field(id)?));
    }
    Ok(make_sampled(&pairs)?)
}
