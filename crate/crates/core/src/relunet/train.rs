use super::capacity::{capacity_report_with, random_directions, CapacityReport, DataGeometry, DEFAULT_BETA_DIRECTIONS};
use super::net::{empirical_loss, explicit_regularizer_relu, mask_gradient_batch, penalty_gradient_batch};
use super::{LabeledSet, RelunetError, TwoLayerNet};
use crate::datasets::ExperimentRecord;
use crate::dropout::{is_diverged, DropoutConfig, TrainMode, TrainParams};
use crate::numerics::{Matrix, SeededRng};

/// He-scaled Gaussian weights: `V` entries `N(0, 2/d0)`, `U` entries `N(0, 2/d1)`.
pub fn he_init_net(d0: usize, d1: usize, d2: usize, rng: &mut SeededRng) -> TwoLayerNet {
    let sv = (2.0 / d0 as f64).sqrt();
    let su = (2.0 / d1 as f64).sqrt();
    let bottom = Matrix::from_fn(d0, d1, |_, _| sv * rng.gaussian());
    let top = Matrix::from_fn(d2, d1, |_, _| su * rng.gaussian());
    TwoLayerNet { top, bottom }
}

/// Per-epoch capacity reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Random directions for `β̂`; drawn once per run.
    pub beta_directions: usize,
    /// When off, `alpha_hat` is NaN and `beta_hat`/`phi` are left empty.
    pub capacity: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            beta_directions: DEFAULT_BETA_DIRECTIONS,
            capacity: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReluTrainOutcome {
    pub model: TwoLayerNet,
    pub records: Vec<ExperimentRecord>,
    /// One per epoch when capacity reporting is on and the network has a single output.
    pub reports: Vec<CapacityReport>,
}

/// Minibatch SGD on the dropout objective of a two-layer network. One record per epoch.
///
/// `SampledMask` drops hidden units with a fresh mask per minibatch example; `ExplicitPenalty`
/// descends `L̂ + R̂` in closed form.
#[allow(clippy::too_many_arguments)]
pub fn sgd_dropout_train_relu(
    init: TwoLayerNet,
    train: &LabeledSet,
    test: Option<&LabeledSet>,
    dropout: &DropoutConfig,
    params: &TrainParams,
    report: &ReportOptions,
    rng: &mut SeededRng,
    run_id: &str,
) -> Result<ReluTrainOutcome, RelunetError> {
    params.validate().map_err(RelunetError::InvalidArgument)?;
    if train.is_empty() {
        return Err(RelunetError::InvalidArgument("training set is empty".into()));
    }
    train.check_net(&init)?;
    if let Some(t) = test {
        t.check_net(&init)?;
    }
    let seed = rng.seed();
    let with_capacity = report.capacity && init.output_dim() == 1 && train.len() >= 2;
    let (geometry, directions) = if with_capacity {
        let mut dir_rng = rng.derive(u64::MAX);
        (
            Some(DataGeometry::of(train.inputs())?),
            random_directions(train.input_dim(), report.beta_directions, &mut dir_rng),
        )
    } else {
        (None, Matrix::zeros(train.input_dim(), 0))
    };

    let mut net = init;
    let mut records = Vec::with_capacity(params.epochs);
    let mut reports = Vec::new();
    let mut batch = vec![0usize; params.batch_size];
    let n = train.len();

    for epoch in 1..=params.epochs {
        for _ in 0..params.steps_per_epoch(n) {
            for b in batch.iter_mut() {
                *b = rng.index(n);
            }
            let g = match params.mode {
                TrainMode::ExplicitPenalty => penalty_gradient_batch(&net, train, &batch, dropout),
                TrainMode::SampledMask => mask_gradient_batch(&net, train, &batch, dropout, rng),
            };
            net.top.axpy(-params.lr, &g.top);
            net.bottom.axpy(-params.lr, &g.bottom);
        }

        let train_loss = empirical_loss(&net, train)?;
        let test_loss = test.map(|t| empirical_loss(&net, t)).transpose()?;
        let finite = net.top.is_finite() && net.bottom.is_finite();
        let cap = match &geometry {
            Some(g) if finite => Some(capacity_report_with(&net, train, dropout, g, &directions)?),
            _ => None,
        };
        let reg = if finite {
            explicit_regularizer_relu(&net, train, dropout)?
        } else {
            f64::NAN
        };
        records.push(ExperimentRecord {
            run_id: run_id.to_string(),
            epoch,
            dropout_rate: dropout.rate(),
            width: net.width(),
            train_loss,
            test_loss,
            gap: test_loss.map(|t| t - train_loss),
            reg_value: reg,
            alpha_hat: cap.map_or(f64::NAN, |c| c.alpha_hat),
            beta_hat: cap.map(|c| c.beta_hat),
            phi: cap.map(|c| c.phi),
            seed,
        });
        if let Some(c) = cap {
            reports.push(c);
        }
        if is_diverged(train_loss) {
            return Err(RelunetError::Diverged {
                epoch,
                loss: train_loss,
                records,
            });
        }
    }
    Ok(ReluTrainOutcome {
        model: net,
        records,
        reports,
    })
}
