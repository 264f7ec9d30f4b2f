//! Matrix sensing and completion with dropout on the factors of `M = UVᵀ`.

mod bounds;
mod concentration;
mod induced;
mod objective;
mod train;

use thiserror::Error;

use crate::datasets::ExperimentRecord;
use crate::dropout::InvalidRate;
use crate::numerics::{Matrix, NumericsError};

pub use bounds::{
    completion_preconditions, gen_bound_mc, gen_bound_optimistic, CompletionPreconditions,
};
pub use concentration::{concentration_audit, gamma, ConcentrationRow};
pub use induced::{
    equalized_minimizer, expected_regularizer, induced_regularizer, induced_regularizer_gaussian,
    induced_regularizer_weighted, weighted_matrix,
};
pub use objective::{
    clip_unit, dropout_objective_mc, erm_loss, erm_loss_of, explicit_regularizer, factor_terms,
    mask_gradient, penalty_gradient, penalty_objective, vectorized_regularizer, Gradient,
};
pub use train::{he_init, sgd_dropout_train, TrainOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Rate(#[from] InvalidRate),
    #[error("training diverged at epoch {epoch} (train loss {loss})")]
    Diverged {
        epoch: usize,
        loss: f64,
        records: Vec<ExperimentRecord>,
    },
}

/// Factored model `M = UVᵀ` with `U: d2×d1`, `V: d0×d1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: Matrix,
    pub v: Matrix,
}

impl FactorPair {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self, SensingError> {
        if u.cols() != v.cols() || u.cols() == 0 {
            return Err(SensingError::Shape(format!(
                "factors need a shared inner dimension >= 1, got {}x{} and {}x{}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols()
            )));
        }
        u.ensure_finite()?;
        v.ensure_finite()?;
        Ok(Self { u, v })
    }

    pub fn width(&self) -> usize {
        self.u.cols()
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    pub fn product(&self) -> Matrix {
        self.u.matmul_transpose(&self.v)
    }
}

/// Distribution of the sensing matrices `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementModel {
    /// i.i.d. standard Gaussian entries.
    Gaussian { rows: usize, cols: usize },
    /// `A = e_i e_kᵀ` with probability `row_probs[i]·col_probs[k]`.
    Indicator {
        row_probs: Vec<f64>,
        col_probs: Vec<f64>,
    },
}

impl MeasurementModel {
    pub fn indicator(row_probs: Vec<f64>, col_probs: Vec<f64>) -> Result<Self, SensingError> {
        for (name, probs) in [("row", &row_probs), ("column", &col_probs)] {
            if probs.is_empty() {
                return Err(SensingError::InvalidArgument(format!("{name} probabilities are empty")));
            }
            if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(SensingError::InvalidArgument(format!(
                    "{name} probabilities must be finite and non-negative"
                )));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(SensingError::InvalidArgument(format!(
                    "{name} probabilities sum to {total}, not 1"
                )));
            }
        }
        Ok(Self::Indicator {
            row_probs,
            col_probs,
        })
    }

    pub fn uniform_indicator(rows: usize, cols: usize) -> Self {
        Self::Indicator {
            row_probs: vec![1.0 / rows as f64; rows],
            col_probs: vec![1.0 / cols as f64; cols],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Gaussian { rows, cols } => (*rows, *cols),
            Self::Indicator {
                row_probs,
                col_probs,
            } => (row_probs.len(), col_probs.len()),
        }
    }

    /// `min_{i,k} p(i)q(k)`; `None` for the Gaussian model.
    pub fn min_cell_probability(&self) -> Option<f64> {
        match self {
            Self::Gaussian { .. } => None,
            Self::Indicator {
                row_probs,
                col_probs,
            } => {
                let p = row_probs.iter().copied().fold(f64::INFINITY, f64::min);
                let q = col_probs.iter().copied().fold(f64::INFINITY, f64::min);
                Some(p * q)
            }
        }
    }
}

/// A single sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    /// Indicator `e_row e_colᵀ`, never materialized.
    Entry { row: usize, col: usize },
    Dense(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub measurement: Measurement,
    pub y: f64,
}

impl Observation {
    pub fn entry(row: usize, col: usize, y: f64) -> Self {
        Self {
            measurement: Measurement::Entry { row, col },
            y,
        }
    }

    /// `(row, col)` for an indicator measurement.
    pub fn entry_cell(&self) -> Option<(usize, usize)> {
        match self.measurement {
            Measurement::Entry { row, col } => Some((row, col)),
            Measurement::Dense(_) => None,
        }
    }
}

/// Observations `yⱼ = ⟨M*, A⁽ʲ⁾⟩ (+ noise)` of a `rows×cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSample {
    rows: usize,
    cols: usize,
    observations: Vec<Observation>,
}

impl SensingSample {
    pub fn new(rows: usize, cols: usize, observations: Vec<Observation>) -> Result<Self, SensingError> {
        for (k, obs) in observations.iter().enumerate() {
            if !obs.y.is_finite() {
                return Err(SensingError::InvalidArgument(format!(
                    "observation {k} has non-finite value {}",
                    obs.y
                )));
            }
            match &obs.measurement {
                Measurement::Entry { row, col } => {
                    if *row >= rows || *col >= cols {
                        return Err(SensingError::Shape(format!(
                            "observation {k} at ({row}, {col}) is outside {rows}x{cols}"
                        )));
                    }
                }
                Measurement::Dense(a) => {
                    if a.shape() != (rows, cols) {
                        return Err(SensingError::Shape(format!(
                            "observation {k} has a {}x{} sensing matrix, expected {rows}x{cols}",
                            a.rows(),
                            a.cols()
                        )));
                    }
                    a.ensure_finite()?;
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            observations,
        })
    }

    /// Indicator observations from `(row, col, y)` triples.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SensingError> {
        Self::new(
            rows,
            cols,
            entries
                .into_iter()
                .map(|(r, c, y)| Observation::entry(r, c, y))
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn subset(&self, indices: &[usize]) -> SensingSample {
        SensingSample {
            rows: self.rows,
            cols: self.cols,
            observations: indices.iter().map(|&i| self.observations[i].clone()).collect(),
        }
    }

    /// Same measurements with every value shifted by `-offset`.
    pub fn shifted(&self, offset: f64) -> SensingSample {
        SensingSample {
            rows: self.rows,
            cols: self.cols,
            observations: self
                .observations
                .iter()
                .map(|o| Observation {
                    measurement: o.measurement.clone(),
                    y: o.y - offset,
                })
                .collect(),
        }
    }

    pub(crate) fn check_factors(&self, f: &FactorPair) -> Result<(), SensingError> {
        if f.rows() != self.rows || f.cols() != self.cols {
            return Err(SensingError::Shape(format!(
                "factors describe a {}x{} matrix but the sample is {}x{}",
                f.rows(),
                f.cols(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_pair_validation() {
        assert!(FactorPair::new(Matrix::zeros(2, 3), Matrix::zeros(4, 2)).is_err());
        assert!(FactorPair::new(Matrix::zeros(2, 0), Matrix::zeros(4, 0)).is_err());
        let f = FactorPair::new(Matrix::identity(2), Matrix::zeros(3, 2)).unwrap();
        assert_eq!((f.rows(), f.cols(), f.width()), (2, 3, 2));
    }

    #[test]
    fn indicator_probabilities_must_be_a_simplex() {
        assert!(MeasurementModel::indicator(vec![0.5, 0.5], vec![1.0]).is_ok());
        assert!(MeasurementModel::indicator(vec![0.5, 0.4], vec![1.0]).is_err());
        assert!(MeasurementModel::indicator(vec![1.5, -0.5], vec![1.0]).is_err());
        let m = MeasurementModel::uniform_indicator(4, 5);
        assert_eq!(m.shape(), (4, 5));
        assert!((m.min_cell_probability().unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn sample_validation() {
        assert!(SensingSample::from_entries(2, 2, [(2, 0, 1.0)]).is_err());
        assert!(SensingSample::from_entries(2, 2, [(0, 0, f64::NAN)]).is_err());
        let dense = Observation {
            measurement: Measurement::Dense(Matrix::zeros(3, 2)),
            y: 0.0,
        };
        assert!(SensingSample::new(2, 2, vec![dense]).is_err());
    }
}
