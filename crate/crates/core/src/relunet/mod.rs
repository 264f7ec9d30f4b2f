//! Two-layer ReLU networks `f(x) = U·σ(Vᵀx)` with dropout on the hidden layer.

mod bounds;
mod capacity;
mod construct;
mod net;
mod train;

use thiserror::Error;

use crate::datasets::ExperimentRecord;
use crate::dropout::InvalidRate;
use crate::numerics::{Matrix, NumericsError};

pub use bounds::{
    gen_bound_classification, gen_bound_regression, gen_bound_symmetrized, rademacher_bound,
    rademacher_bound_expected,
};
pub use capacity::{
    alpha_symmetrized, beta_hat, capacity_report, capacity_report_with, co_adaptation, flows,
    random_directions, symmetrize, CapacityReport, DataGeometry, DEFAULT_BETA_DIRECTIONS,
};
pub use construct::{counterexample_distribution, lower_bound_embedding, CounterExample};
pub use net::{
    activation_second_moments, clip_scalar_output, dropout_objective_mc_relu, empirical_loss,
    explicit_regularizer_relu, forward, isotropy_regularizer_check, path_norm_sq, penalty_gradient_relu,
    penalty_objective_relu, relu, standard_gaussian, IsotropyCheck, NetGradient,
};
pub use train::{he_init_net, sgd_dropout_train_relu, ReluTrainOutcome, ReportOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelunetError {
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

/// Weights `top: d2×d1` (U) and `bottom: d0×d1` (V); hidden unit `j` has incoming weights
/// `bottom[:, j]` and outgoing weights `top[:, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    pub top: Matrix,
    pub bottom: Matrix,
}

impl TwoLayerNet {
    pub fn new(top: Matrix, bottom: Matrix) -> Result<Self, RelunetError> {
        if top.cols() != bottom.cols() || top.cols() == 0 {
            return Err(RelunetError::Shape(format!(
                "layers need a shared hidden width >= 1, got top {}x{} and bottom {}x{}",
                top.rows(),
                top.cols(),
                bottom.rows(),
                bottom.cols()
            )));
        }
        top.ensure_finite()?;
        bottom.ensure_finite()?;
        Ok(Self { top, bottom })
    }

    pub fn input_dim(&self) -> usize {
        self.bottom.rows()
    }

    pub fn width(&self) -> usize {
        self.top.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.top.rows()
    }

    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Self {
            top: Matrix::zeros(d2, d1),
            bottom: Matrix::zeros(d0, d1),
        }
    }

    /// `‖u_j‖²` for every hidden unit.
    pub fn outgoing_norms_sq(&self) -> Vec<f64> {
        (0..self.width()).map(|j| self.top.column_norm_sq(j)).collect()
    }
}

/// Inputs `d0×n` and targets `d2×n`, one example per column, targets in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    inputs: Matrix,
    targets: Matrix,
}

impl LabeledSet {
    /// Empty sets (`n = 0`) are allowed so that filtering can legitimately return nothing.
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self, RelunetError> {
        if inputs.cols() != targets.cols() {
            return Err(RelunetError::Shape(format!(
                "{} input columns but {} target columns",
                inputs.cols(),
                targets.cols()
            )));
        }
        inputs.ensure_finite()?;
        targets.ensure_finite()?;
        if targets.as_slice().iter().any(|y| y.abs() > 1.0) {
            return Err(RelunetError::InvalidArgument("targets must lie in [-1, 1]".into()));
        }
        Ok(Self { inputs, targets })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.rows()
    }

    pub fn input(&self, i: usize) -> Vec<f64> {
        self.inputs.column(i)
    }

    pub fn target(&self, i: usize) -> Vec<f64> {
        self.targets.column(i)
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        let pick = |m: &Matrix| Matrix::from_fn(m.rows(), indices.len(), |r, c| m[(r, indices[c])]);
        LabeledSet {
            inputs: pick(&self.inputs),
            targets: pick(&self.targets),
        }
    }

    pub(crate) fn check_net(&self, net: &TwoLayerNet) -> Result<(), RelunetError> {
        if net.input_dim() != self.input_dim() || net.output_dim() != self.output_dim() {
            return Err(RelunetError::Shape(format!(
                "network maps {} -> {} but data is {} -> {}",
                net.input_dim(),
                net.output_dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_examples(&self, min: usize) -> Result<(), RelunetError> {
        if self.len() < min {
            return Err(RelunetError::InvalidArgument(format!(
                "need at least {min} examples, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}
