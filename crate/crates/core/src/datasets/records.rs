//! Per-epoch metrics rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use super::DataError;

pub const RECORD_HEADER: [&str; 12] = [
    "run_id",
    "epoch",
    "dropout_rate",
    "width",
    "train_loss",
    "test_loss",
    "gap",
    "reg_value",
    "alpha_hat",
    "beta_hat",
    "phi",
    "seed",
];

/// One metrics row. Optional columns are written as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub run_id: String,
    pub epoch: usize,
    pub dropout_rate: f64,
    pub width: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub gap: Option<f64>,
    pub reg_value: f64,
    pub alpha_hat: f64,
    pub beta_hat: Option<f64>,
    pub phi: Option<f64>,
    pub seed: u64,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl ExperimentRecord {
    fn to_fields(&self) -> [String; 12] {
        [
            self.run_id.clone(),
            self.epoch.to_string(),
            format_float(self.dropout_rate),
            self.width.to_string(),
            format_float(self.train_loss),
            format_opt(self.test_loss),
            format_opt(self.gap),
            format_float(self.reg_value),
            format_float(self.alpha_hat),
            format_opt(self.beta_hat),
            format_opt(self.phi),
            self.seed.to_string(),
        ]
    }

    fn from_fields(row: &csv::StringRecord, line: usize) -> Result<Self, DataError> {
        if row.len() != RECORD_HEADER.len() {
            return Err(DataError::Parse {
                line,
                message: format!("expected {} fields, got {}", RECORD_HEADER.len(), row.len()),
            });
        }
        let bad = |field: &str, value: &str| DataError::Parse {
            line,
            message: format!("bad {field} value `{value}`"),
        };
        let float = |k: usize| -> Result<f64, DataError> {
            row[k].parse::<f64>().map_err(|_| bad(RECORD_HEADER[k], &row[k]))
        };
        let opt = |k: usize| -> Result<Option<f64>, DataError> {
            if row[k].is_empty() {
                Ok(None)
            } else {
                float(k).map(Some)
            }
        };
        Ok(Self {
            run_id: row[0].to_string(),
            epoch: row[1].parse().map_err(|_| bad("epoch", &row[1]))?,
            dropout_rate: float(2)?,
            width: row[3].parse().map_err(|_| bad("width", &row[3]))?,
            train_loss: float(4)?,
            test_loss: opt(5)?,
            gap: opt(6)?,
            reg_value: float(7)?,
            alpha_hat: float(8)?,
            beta_hat: opt(9)?,
            phi: opt(10)?,
            seed: row[11].parse().map_err(|_| bad("seed", &row[11]))?,
        })
    }
}

/// Writes the header followed by one row per record, in the given order.
pub fn write_records_to<W: Write>(records: &[ExperimentRecord], out: W) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(records: &[ExperimentRecord], path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_records_to(records, std::io::BufWriter::new(file))
}

pub fn read_records_from<R: Read>(input: R) -> Result<Vec<ExperimentRecord>, DataError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(DataError::Parse {
            line: 1,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, row) in r.records().enumerate() {
        out.push(ExperimentRecord::from_fields(&row?, k + 2)?);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, DataError> {
    read_records_from(std::fs::File::open(path)?)
}
