//! Bound evaluation from a measured-quantities CSV.
//!
//! Input header (columns may appear in any order; unused cells may be empty):
//!
//! ```text
//! kind,train_loss,alpha,beta,x_mahal,rank_c,n,d2,d0,min_pq,spectral_norm,k_const
//! ```
//!
//! `kind` is one of `mc`, `optimistic`, `rademacher`, `rademacher_expected`, `regression`,
//! `symmetrized`, `classification`, `classification_sym`. For the symmetrized kinds `alpha` holds
//! `α'` and `train_loss` the loss on the symmetrized sample. `delta` comes from the run configuration.
//!
//! Output header: `row,kind,bound,train_loss,flags`. `flags` lists violated assumptions separated
//! by `;`, or the reason a bound could not be evaluated.

use std::collections::HashMap;
use std::io::Read;

use super::config::RunConfig;
use super::CliError;
use crate::datasets::format_float;
use crate::relunet::{
    gen_bound_classification, gen_bound_regression, gen_bound_symmetrized, rademacher_bound, rademacher_bound_expected,
};
use crate::sensing::{completion_preconditions, gen_bound_mc, gen_bound_optimistic};

pub const MEASURED_COLUMNS: [&str; 12] = [
    "kind",
    "train_loss",
    "alpha",
    "beta",
    "x_mahal",
    "rank_c",
    "n",
    "d2",
    "d0",
    "min_pq",
    "spectral_norm",
    "k_const",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    /// 1-based data row of the input file.
    pub row: usize,
    pub kind: String,
    pub bound: Option<f64>,
    pub train_loss: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub rows: Vec<BoundRow>,
}

impl BoundsReport {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| !r.flags.is_empty()).count()
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["row", "kind", "bound", "train_loss", "flags"])?;
        for r in &self.rows {
            w.write_record([
                r.row.to_string(),
                r.kind.clone(),
                r.bound.map(format_float).unwrap_or_default(),
                r.train_loss.map(format_float).unwrap_or_default(),
                r.flags.join(";"),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

struct Row<'a> {
    cells: HashMap<&'a str, &'a str>,
}

impl Row<'_> {
    fn f(&self, key: &str) -> Result<f64, String> {
        match self.cells.get(key).map(|s| s.trim()) {
            None | Some("") => Err(format!("missing {key}")),
            Some(s) => s.parse().map_err(|_| format!("bad {key} `{s}`")),
        }
    }

    fn opt(&self, key: &str) -> Result<Option<f64>, String> {
        match self.cells.get(key).map(|s| s.trim()) {
            None | Some("") => Ok(None),
            Some(_) => self.f(key).map(Some),
        }
    }

    fn count(&self, key: &str) -> Result<usize, String> {
        let v = self.f(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(format!("{key} must be a non-negative integer, got {v}"));
        }
        Ok(v as usize)
    }
}

fn evaluate(row: &Row, kind: &str, delta: f64, flags: &mut Vec<String>) -> Result<f64, String> {
    match kind {
        "mc" | "optimistic" => {
            let (alpha, d2, n) = (row.f("alpha")?, row.count("d2")?, row.count("n")?);
            if let (Some(d0), Some(min_pq)) = (row.opt("d0")?, row.opt("min_pq")?) {
                let pre = completion_preconditions(d2, d0 as usize, n, min_pq, row.opt("spectral_norm")?);
                flags.extend(pre.violations().into_iter().map(String::from));
            }
            if kind == "mc" {
                gen_bound_mc(row.f("train_loss")?, alpha, d2, n, delta).map_err(|e| e.to_string())
            } else {
                let k = row.opt("k_const")?.unwrap_or(1.0);
                gen_bound_optimistic(alpha, d2, n, delta, k).map_err(|e| e.to_string())
            }
        }
        "rademacher" => {
            rademacher_bound(row.f("alpha")?, row.f("beta")?, row.f("x_mahal")?, row.count("n")?).map_err(|e| e.to_string())
        }
        "rademacher_expected" => {
            rademacher_bound_expected(row.f("alpha")?, row.f("beta")?, row.count("rank_c")?, row.count("n")?)
                .map_err(|e| e.to_string())
        }
        "regression" => gen_bound_regression(
            row.f("train_loss")?,
            row.f("alpha")?,
            row.f("beta")?,
            row.f("x_mahal")?,
            row.count("n")?,
            delta,
        )
        .map_err(|e| e.to_string()),
        "symmetrized" => {
            gen_bound_symmetrized(row.f("train_loss")?, row.f("alpha")?, row.f("x_mahal")?, row.count("n")?, delta)
                .map_err(|e| e.to_string())
        }
        "classification" | "classification_sym" => {
            let sym = kind == "classification_sym";
            let beta = if sym { row.opt("beta")?.unwrap_or(1.0) } else { row.f("beta")? };
            let (l, a, x, n) = (row.f("train_loss")?, row.f("alpha")?, row.f("x_mahal")?, row.count("n")?);
            gen_bound_classification(l, a, beta, x, n, delta, sym).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown kind `{other}`")),
    }
}

pub fn evaluate_measured<R: Read>(input: R, delta: f64) -> Result<BoundsReport, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if !header.iter().any(|h| h == "kind") {
        return Err(CliError::Config("measured-quantities file has no `kind` column".into()));
    }
    if let Some(h) = header.iter().find(|h| !MEASURED_COLUMNS.contains(h)) {
        return Err(CliError::Config(format!("unknown measured column `{h}`")));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cells: HashMap<&str, &str> = header.iter().zip(rec.iter()).collect();
        let row = Row { cells };
        let kind = row.cells.get("kind").copied().unwrap_or("").to_string();
        let mut flags = Vec::new();
        let bound = match evaluate(&row, &kind, delta, &mut flags) {
            Ok(b) => Some(b),
            Err(msg) => {
                flags.push(format!("invalid: {msg}"));
                None
            }
        };
        rows.push(BoundRow {
            row: k + 1,
            kind,
            bound,
            train_loss: row.opt("train_loss").ok().flatten(),
            flags,
        });
    }
    Ok(BoundsReport { rows })
}

/// Evaluates every row of `cfg.measured` and writes the report to `cfg.out` when set.
pub fn cmd_bounds(cfg: &RunConfig) -> Result<BoundsReport, CliError> {
    cfg.validate()?;
    let path = cfg
        .measured
        .as_ref()
        .ok_or_else(|| CliError::Config("bounds needs a `measured` quantities file".into()))?;
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let report = evaluate_measured(file, cfg.delta)?;
    if let Some(out) = &cfg.out {
        std::fs::write(out, report.to_csv()?).map_err(|e| CliError::Config(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(report)
}
