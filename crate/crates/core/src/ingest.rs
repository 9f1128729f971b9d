//! Streaming CSV ingest of PCAP-derived telemetry.
//!
//! The reader holds at most [`INFERENCE_SAMPLE_ROWS`] rows of lookahead; the
//! rest of the file is consumed one row at a time.

use std::collections::{BTreeMap, VecDeque};
use std::fs::File;
use std::path::PathBuf;

use csv::StringRecord;
use log::debug;
use serde::{Deserialize, Serialize};

use crate::codec::{RawRecord, N_FEATURES};
use crate::error::{Error, Result};

/// Rows sampled to decide which columns are numeric.
pub const INFERENCE_SAMPLE_ROWS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub path: PathBuf,
    /// Exactly six column names; `None` picks the first six numeric columns.
    pub field_names: Option<Vec<String>>,
    pub row_limit: Option<usize>,
    /// Skip and count bad rows (`true`) or abort on the first one.
    pub skip_invalid: bool,
}

impl IngestConfig {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            field_names: None,
            row_limit: None,
            skip_invalid: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows_read: u64,
    pub rows_emitted: u64,
    pub rows_rejected: u64,
    pub rejection_reasons: BTreeMap<String, u64>,
}

impl IngestStats {
    fn reject(&mut self, reason: Rejection) {
        self.rows_rejected += 1;
        *self
            .rejection_reasons
            .entry(reason.as_str().to_string())
            .or_default() += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rejection {
    Missing,
    NonNumeric,
    NonFinite,
}

impl Rejection {
    fn as_str(self) -> &'static str {
        match self {
            Rejection::Missing => "missing",
            Rejection::NonNumeric => "non-numeric",
            Rejection::NonFinite => "non-finite",
        }
    }
}

/// Columns whose sampled values are all numeric, in file order.
///
/// Empty cells are ignored. `NaN`/`inf` count as numeric-typed (the row is
/// rejected later as non-finite) but a column needs at least one finite value.
pub fn infer_numeric_columns(headers: &StringRecord, sample: &[StringRecord]) -> Vec<String> {
    (0..headers.len())
        .filter(|&col| {
            let mut finite = 0;
            for row in sample {
                match row.get(col).map(str::trim) {
                    None | Some("") => {}
                    Some(v) => match v.parse::<f64>() {
                        Ok(x) if x.is_finite() => finite += 1,
                        Ok(_) => {}
                        Err(_) => return false,
                    },
                }
            }
            finite > 0
        })
        .map(|col| headers[col].to_string())
        .collect()
}

/// Opens `config.path` and returns a record stream. Column selection happens
/// here, so schema errors surface before any record is produced.
pub fn load_csv(config: &IngestConfig) -> Result<CsvRecordStream> {
    let file = File::open(&config.path).map_err(|e| Error::io(&config.path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Schema("missing header row".into()));
    }

    let mut lookahead = VecDeque::with_capacity(INFERENCE_SAMPLE_ROWS);
    let mut record = StringRecord::new();
    while lookahead.len() < INFERENCE_SAMPLE_ROWS && reader.read_record(&mut record)? {
        lookahead.push_back(record.clone());
    }

    let columns = match &config.field_names {
        Some(names) => {
            if names.len() != N_FEATURES {
                return Err(Error::Config(format!(
                    "expected {N_FEATURES} column names, got {}",
                    names.len()
                )));
            }
            names.clone()
        }
        None => {
            if lookahead.is_empty() {
                return Err(Error::Data(format!(
                    "{} has no data rows",
                    config.path.display()
                )));
            }
            let sample: Vec<StringRecord> = lookahead.iter().cloned().collect();
            let numeric = infer_numeric_columns(&headers, &sample);
            if numeric.len() < N_FEATURES {
                return Err(Error::Schema(format!(
                    "need {N_FEATURES} numeric columns, found {} ({})",
                    numeric.len(),
                    numeric.join(", ")
                )));
            }
            numeric.into_iter().take(N_FEATURES).collect()
        }
    };

    let mut indices = [0usize; N_FEATURES];
    for (slot, name) in indices.iter_mut().zip(&columns) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in header")))?;
    }
    debug!("ingest columns {columns:?} at {indices:?}");

    Ok(CsvRecordStream {
        reader,
        lookahead,
        indices,
        columns,
        row_limit: config.row_limit,
        skip_invalid: config.skip_invalid,
        stats: IngestStats::default(),
        done: false,
        buf: StringRecord::new(),
    })
}

pub struct CsvRecordStream {
    reader: csv::Reader<File>,
    lookahead: VecDeque<StringRecord>,
    indices: [usize; N_FEATURES],
    columns: Vec<String>,
    row_limit: Option<usize>,
    skip_invalid: bool,
    stats: IngestStats,
    done: bool,
    buf: StringRecord,
}

impl CsvRecordStream {
    /// Names of the six selected columns.
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    fn parse(&self, row: &StringRecord) -> std::result::Result<[f64; N_FEATURES], Rejection> {
        let mut values = [0.0; N_FEATURES];
        for (v, &col) in values.iter_mut().zip(&self.indices) {
            let cell = row.get(col).map(str::trim).unwrap_or("");
            if cell.is_empty() {
                return Err(Rejection::Missing);
            }
            let x: f64 = cell.parse().map_err(|_| Rejection::NonNumeric)?;
            if !x.is_finite() {
                return Err(Rejection::NonFinite);
            }
            *v = x;
        }
        Ok(values)
    }

    fn next_row(&mut self) -> Result<Option<StringRecord>> {
        if let Some(row) = self.lookahead.pop_front() {
            return Ok(Some(row));
        }
        if self.reader.read_record(&mut self.buf)? {
            Ok(Some(self.buf.clone()))
        } else {
            Ok(None)
        }
    }
}

impl Iterator for CsvRecordStream {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            if self
                .row_limit
                .is_some_and(|limit| self.stats.rows_emitted as usize >= limit)
            {
                self.done = true;
                return None;
            }
            let row = match self.next_row() {
                Ok(Some(row)) => row,
                Ok(None) => {
                    self.done = true;
                    if self.stats.rows_emitted == 0 {
                        return Some(Err(Error::Data("no valid rows after cleaning".into())));
                    }
                    return None;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            };
            let row_index = self.stats.rows_read;
            self.stats.rows_read += 1;
            match self.parse(&row) {
                Ok(values) => {
                    self.stats.rows_emitted += 1;
                    return Some(Ok(RawRecord { row_index, values }));
                }
                Err(reason) => {
                    self.stats.reject(reason);
                    debug!("row {row_index} rejected: {}", reason.as_str());
                    if !self.skip_invalid {
                        self.done = true;
                        return Some(Err(Error::Data(format!(
                            "row {row_index} rejected ({})",
                            reason.as_str()
                        ))));
                    }
                }
            }
        }
    }
}
