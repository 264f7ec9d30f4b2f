use super::objective::{explicit_regularizer, mask_gradient, penalty_gradient_batch};
use super::{erm_loss, FactorPair, SensingError, SensingSample};
use crate::datasets::ExperimentRecord;
use crate::dropout::{is_diverged, DropoutConfig, TrainMode, TrainParams};
use crate::numerics::{Matrix, SeededRng};

/// He-scaled Gaussian factors: `V` entries `N(0, 2/d0)`, `U` entries `N(0, 2/d1)`.
pub fn he_init(rows: usize, cols: usize, width: usize, rng: &mut SeededRng) -> FactorPair {
    let su = (2.0 / width as f64).sqrt();
    let sv = (2.0 / cols as f64).sqrt();
    let u = Matrix::from_fn(rows, width, |_, _| su * rng.gaussian());
    let v = Matrix::from_fn(cols, width, |_, _| sv * rng.gaussian());
    FactorPair { u, v }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub records: Vec<ExperimentRecord>,
}

/// Minibatch SGD on the dropout objective. One record per epoch.
///
/// `SampledMask` draws a fresh mask per minibatch example; `ExplicitPenalty` descends the
/// closed form `L̂ + λR̂`. The record's `alpha_hat` is `d1·R̂(U,V)`.
pub fn sgd_dropout_train(
    init: FactorPair,
    train: &SensingSample,
    test: Option<&SensingSample>,
    dropout: &DropoutConfig,
    params: &TrainParams,
    rng: &mut SeededRng,
    run_id: &str,
) -> Result<TrainOutcome<FactorPair>, SensingError> {
    params.validate().map_err(SensingError::InvalidArgument)?;
    if train.is_empty() {
        return Err(SensingError::InvalidArgument("training sample is empty".into()));
    }
    train.check_factors(&init)?;
    if let Some(t) = test {
        t.check_factors(&init)?;
    }
    let seed = rng.seed();
    let mut f = init;
    let mut records = Vec::with_capacity(params.epochs);
    let mut batch = vec![0usize; params.batch_size];
    let n = train.len();

    for epoch in 1..=params.epochs {
        for _ in 0..params.steps_per_epoch(n) {
            for b in batch.iter_mut() {
                *b = rng.index(n);
            }
            let g = match params.mode {
                TrainMode::ExplicitPenalty => penalty_gradient_batch(&f, train, &batch, dropout),
                TrainMode::SampledMask => mask_gradient(&f, train, &batch, dropout, rng),
            };
            f.u.axpy(-params.lr, &g.u);
            f.v.axpy(-params.lr, &g.v);
        }

        let train_loss = erm_loss(&f, train)?;
        let test_loss = test.map(|t| erm_loss(&f, t)).transpose()?;
        let reg = if train_loss.is_finite() {
            explicit_regularizer(&f, train)?
        } else {
            f64::NAN
        };
        records.push(ExperimentRecord {
            run_id: run_id.to_string(),
            epoch,
            dropout_rate: dropout.rate(),
            width: f.width(),
            train_loss,
            test_loss,
            gap: test_loss.map(|t| t - train_loss),
            reg_value: reg,
            alpha_hat: f.width() as f64 * reg,
            beta_hat: None,
            phi: None,
            seed,
        });
        if is_diverged(train_loss) {
            return Err(SensingError::Diverged {
                epoch,
                loss: train_loss,
                records,
            });
        }
    }
    Ok(TrainOutcome { model: f, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_task() -> SensingSample {
        SensingSample::from_entries(3, 3, [(0, 0, 1.0), (1, 1, -0.5), (2, 0, 0.25), (0, 2, 0.7)]).unwrap()
    }

    #[test]
    fn penalty_mode_at_zero_rate_reduces_training_loss() {
        let s = tiny_task();
        let mut rng = SeededRng::from_seed(2);
        let init = he_init(3, 3, 2, &mut rng);
        let start = erm_loss(&init, &s).unwrap();
        let params = TrainParams {
            lr: 0.05,
            batch_size: 4,
            epochs: 200,
            mode: TrainMode::ExplicitPenalty,
        };
        let out = sgd_dropout_train(init, &s, Some(&s), &DropoutConfig::none(), &params, &mut rng, "t").unwrap();
        assert_eq!(out.records.len(), 200);
        assert!(out.records.last().unwrap().train_loss < 0.1 * start);
        assert_eq!(out.records[0].gap, Some(0.0));
    }

    #[test]
    fn divergence_is_reported_with_records() {
        let s = tiny_task();
        let mut rng = SeededRng::from_seed(3);
        let init = he_init(3, 3, 2, &mut rng);
        let params = TrainParams {
            lr: 50.0,
            batch_size: 4,
            epochs: 50,
            mode: TrainMode::ExplicitPenalty,
        };
        match sgd_dropout_train(init, &s, None, &DropoutConfig::none(), &params, &mut rng, "t") {
            Err(SensingError::Diverged { epoch, records, .. }) => {
                assert_eq!(records.len(), epoch);
                assert!(records.last().unwrap().train_loss.is_nan() || records.last().unwrap().train_loss > 1e6);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let s = tiny_task();
        let mut rng = SeededRng::from_seed(0);
        let init = he_init(3, 3, 2, &mut rng);
        let params = TrainParams {
            lr: 0.0,
            batch_size: 1,
            epochs: 1,
            mode: TrainMode::SampledMask,
        };
        assert!(sgd_dropout_train(init, &s, None, &DropoutConfig::none(), &params, &mut rng, "t").is_err());
    }
}
