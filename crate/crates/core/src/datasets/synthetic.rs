use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;

use super::DataError;
use crate::numerics::{spectral_norm, Matrix, SeededRng};
use crate::relunet::{forward, LabeledSet, TwoLayerNet};
use crate::sensing::{MeasurementModel, SensingSample};

/// Random `d2×d0` matrix of the given rank, `A·Bᵀ` with Gaussian factors.
///
/// With `normalize` the spectral norm is scaled to exactly 1.
pub fn gen_low_rank(d2: usize, d0: usize, rank: usize, rng: &mut SeededRng, normalize: bool) -> Result<Matrix, DataError> {
    if rank > d2.min(d0) {
        return Err(DataError::InvalidArgument(format!(
            "rank {rank} exceeds min({d2}, {d0})"
        )));
    }
    let a = Matrix::from_fn(d2, rank, |_, _| rng.gaussian());
    let b = Matrix::from_fn(d0, rank, |_, _| rng.gaussian());
    let m = a.matmul_transpose(&b);
    if !normalize || rank == 0 {
        return Ok(m);
    }
    let s = spectral_norm(&m).map_err(|e| DataError::InvalidArgument(e.to_string()))?;
    Ok(m.scale(1.0 / s))
}

fn require_indicator<'a>(m: &Matrix, model: &'a MeasurementModel) -> Result<(&'a [f64], &'a [f64]), DataError> {
    match model {
        MeasurementModel::Indicator { row_probs, col_probs } if model.shape() == m.shape() => {
            Ok((row_probs, col_probs))
        }
        MeasurementModel::Indicator { .. } => Err(DataError::InvalidArgument(format!(
            "model is {:?} but the matrix is {}x{}",
            model.shape(),
            m.rows(),
            m.cols()
        ))),
        MeasurementModel::Gaussian { .. } => Err(DataError::InvalidArgument(
            "entry sampling needs an indicator measurement model".into(),
        )),
    }
}

/// `n` i.i.d. entries of `m`, cell `(i, k)` drawn with probability `p(i)·q(k)` (with replacement).
pub fn sample_indicator_observations(
    m: &Matrix,
    model: &MeasurementModel,
    n: usize,
    rng: &mut SeededRng,
) -> Result<SensingSample, DataError> {
    let (p, q) = require_indicator(m, model)?;
    let rows = WeightedIndex::new(p).map_err(|e| DataError::InvalidArgument(e.to_string()))?;
    let cols = WeightedIndex::new(q).map_err(|e| DataError::InvalidArgument(e.to_string()))?;
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .map(|_| {
            let (r, c) = (rows.sample(rng), cols.sample(rng));
            (r, c, m[(r, c)])
        })
        .collect();
    Ok(SensingSample::from_entries(m.rows(), m.cols(), entries)?)
}

/// Completion problem with a known ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionTask {
    pub ground_truth: Option<Matrix>,
    pub train: SensingSample,
    pub test: SensingSample,
    pub model: MeasurementModel,
}

/// Low-rank completion task with distinct train and test cells (sampling without replacement).
///
/// `train_fraction` and `test_fraction` are shares of all `rows·cols` cells. Gaussian noise of
/// standard deviation `noise_std` is added to every observed value. The ground truth has
/// spectral norm 1 when `normalize` is set; the model is the uniform indicator.
#[allow(clippy::too_many_arguments)]
pub fn gen_completion_task(
    rows: usize,
    cols: usize,
    rank: usize,
    train_fraction: f64,
    test_fraction: f64,
    noise_std: f64,
    normalize: bool,
    rng: &mut SeededRng,
) -> Result<CompletionTask, DataError> {
    if !(train_fraction > 0.0 && test_fraction >= 0.0 && train_fraction + test_fraction <= 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "fractions {train_fraction} and {test_fraction} must be non-negative, with a positive train share, and sum to at most 1"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(DataError::InvalidArgument(format!("noise_std must be non-negative, got {noise_std}")));
    }
    let m = gen_low_rank(rows, cols, rank, rng, normalize)?;
    let total = rows * cols;
    let mut cells: Vec<usize> = (0..total).collect();
    cells.shuffle(rng);
    let n_train = (train_fraction * total as f64).floor() as usize;
    let n_test = (test_fraction * total as f64).floor() as usize;
    let mut observe = |ids: &[usize]| -> Vec<(usize, usize, f64)> {
        ids.iter()
            .map(|&c| {
                let (r, k) = (c / cols, c % cols);
                (r, k, m[(r, k)] + noise_std * rng.gaussian())
            })
            .collect()
    };
    let train = observe(&cells[..n_train]);
    let test = observe(&cells[n_train..n_train + n_test]);
    Ok(CompletionTask {
        train: SensingSample::from_entries(rows, cols, train)?,
        test: SensingSample::from_entries(rows, cols, test)?,
        model: MeasurementModel::uniform_indicator(rows, cols),
        ground_truth: Some(m),
    })
}

/// Input distribution of a planted-teacher task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputDist {
    /// `x ~ N(0, I)`.
    Gaussian,
    /// `|x|` entrywise for `x ~ N(0, I)`; non-negative like image pixels.
    FoldedGaussian,
}

impl std::str::FromStr for InputDist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "folded" | "folded-gaussian" => Ok(Self::FoldedGaussian),
            other => Err(format!("unknown input distribution `{other}`")),
        }
    }
}

/// Regression problem drawn from a fixed network.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTask {
    pub teacher: Option<TwoLayerNet>,
    pub train: LabeledSet,
    pub test: LabeledSet,
    pub noise_std: f64,
}

fn draw_inputs(d0: usize, n: usize, dist: InputDist, rng: &mut SeededRng) -> Matrix {
    let m = Matrix::from_fn(d0, n, |_, _| rng.gaussian());
    match dist {
        InputDist::Gaussian => m,
        InputDist::FoldedGaussian => m.map(f64::abs),
    }
}

fn label(teacher: &TwoLayerNet, inputs: Matrix, noise_std: f64, rng: &mut SeededRng) -> Result<LabeledSet, DataError> {
    let mut y = Matrix::zeros(1, inputs.cols());
    for i in 0..inputs.cols() {
        let clean = forward(teacher, &inputs.column(i))?[0];
        y[(0, i)] = (clean + noise_std * rng.gaussian()).clamp(-1.0, 1.0);
    }
    Ok(LabeledSet::new(inputs, y)?)
}

/// Labels fresh inputs with `y = clip(f_teacher(x) + noise, [−1, 1])`.
pub fn planted_task_from_teacher(
    teacher: TwoLayerNet,
    n_train: usize,
    n_test: usize,
    input_dist: InputDist,
    noise_std: f64,
    rng: &mut SeededRng,
) -> Result<RegressionTask, DataError> {
    if teacher.output_dim() != 1 {
        return Err(DataError::InvalidArgument("teachers must have a single output".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(DataError::InvalidArgument(format!("noise_std must be non-negative, got {noise_std}")));
    }
    let d0 = teacher.input_dim();
    let x_train = draw_inputs(d0, n_train, input_dist, rng);
    let train = label(&teacher, x_train, noise_std, rng)?;
    let x_test = draw_inputs(d0, n_test, input_dist, rng);
    let test = label(&teacher, x_test, noise_std, rng)?;
    Ok(RegressionTask {
        teacher: Some(teacher),
        train,
        test,
        noise_std,
    })
}

/// Random width-`d1` teacher with `V* ~ N(0, 1/d0)` and `u* ~ N(0, 1/d1)`, then
/// [`planted_task_from_teacher`].
pub fn gen_planted_teacher(
    d0: usize,
    d1: usize,
    n_train: usize,
    n_test: usize,
    input_dist: InputDist,
    noise_std: f64,
    rng: &mut SeededRng,
) -> Result<RegressionTask, DataError> {
    if d0 == 0 || d1 == 0 {
        return Err(DataError::InvalidArgument("teacher dimensions must be at least 1".into()));
    }
    let sv = (1.0 / d0 as f64).sqrt();
    let su = (1.0 / d1 as f64).sqrt();
    let bottom = Matrix::from_fn(d0, d1, |_, _| sv * rng.gaussian());
    let top = Matrix::from_fn(1, d1, |_, _| su * rng.gaussian());
    planted_task_from_teacher(TwoLayerNet::new(top, bottom)?, n_train, n_test, input_dist, noise_std, rng)
}
