use rayon::prelude::*;

use super::config::{DataSource, RunConfig};
use super::{CliError, DATA_STREAM, SYM_STREAM, TRAIN_STREAM};
use crate::datasets::{
    gen_completion_task, gen_planted_teacher, load_binary_pair, parse_movielens, split, write_records, CompletionTask,
    ExperimentRecord,
};
use crate::dropout::{DropoutConfig, TrainParams};
use crate::numerics::SeededRng;
use crate::relunet::{he_init_net, sgd_dropout_train_relu, symmetrize, LabeledSet, RelunetError, ReportOptions};
use crate::sensing::{he_init, sgd_dropout_train, SensingError, SensingSample};

/// Result of one `(seed, rate)` run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub rate: f64,
    pub records: Vec<ExperimentRecord>,
    pub diverged: bool,
}

impl RunResult {
    pub fn last(&self) -> &ExperimentRecord {
        self.records.last().expect("every run records at least one epoch")
    }
}

/// All runs of a training command, ordered by `(seed, rate)` as configured.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub runs: Vec<RunResult>,
}

impl TrainReport {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        self.runs.iter().flat_map(|r| r.records.iter().cloned()).collect()
    }

    pub fn diverged(&self) -> Vec<(u64, f64)> {
        self.runs.iter().filter(|r| r.diverged).map(|r| (r.seed, r.rate)).collect()
    }

    /// 3 when any run diverged, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.diverged().is_empty() {
            0
        } else {
            3
        }
    }
}

fn params(cfg: &RunConfig) -> TrainParams {
    TrainParams {
        lr: cfg.lr,
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        mode: cfg.mode,
    }
}

fn grid(cfg: &RunConfig) -> Vec<(u64, f64)> {
    cfg.seeds
        .iter()
        .flat_map(|&s| cfg.rates.iter().map(move |&r| (s, r)))
        .collect()
}

fn finish(cfg: &RunConfig, runs: Vec<RunResult>) -> Result<TrainReport, CliError> {
    let report = TrainReport { runs };
    if let Some(path) = &cfg.out {
        write_records(&report.records(), path)?;
    }
    Ok(report)
}

/// Train/test observations for one seed of a completion experiment.
pub fn completion_data(cfg: &RunConfig, seed: u64) -> Result<(SensingSample, SensingSample), CliError> {
    let mut rng = SeededRng::new(seed, DATA_STREAM);
    match &cfg.data {
        DataSource::Synthetic => {
            let CompletionTask { train, test, .. } = gen_completion_task(
                cfg.rows,
                cfg.cols,
                cfg.rank,
                cfg.train_fraction,
                cfg.test_fraction,
                cfg.noise,
                cfg.normalize,
                &mut rng,
            )?;
            Ok((train, test))
        }
        DataSource::MovieLens(path) => {
            let ml = parse_movielens(path, cfg.center)?;
            Ok(split(&ml.sample, 0.1, &mut rng)?)
        }
        DataSource::Idx { .. } => Err(CliError::Config("mc-train needs synthetic or MovieLens data".into())),
    }
}

/// One completion run; divergence is reported in the result rather than as an error.
pub fn run_mc(cfg: &RunConfig, seed: u64, rate: f64) -> Result<RunResult, CliError> {
    let (train, test) = completion_data(cfg, seed)?;
    let dropout = DropoutConfig::new(rate).map_err(|e| CliError::Config(e.to_string()))?;
    let mut rng = SeededRng::new(seed, TRAIN_STREAM);
    let init = he_init(train.rows(), train.cols(), cfg.width, &mut rng);
    let test = (!test.is_empty()).then_some(&test);
    match sgd_dropout_train(init, &train, test, &dropout, &params(cfg), &mut rng, &cfg.run_id(seed, rate)) {
        Ok(out) => Ok(RunResult {
            seed,
            rate,
            records: out.records,
            diverged: false,
        }),
        Err(SensingError::Diverged { records, .. }) => Ok(RunResult {
            seed,
            rate,
            records,
            diverged: true,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Trains every `(seed, rate)` pair of a completion experiment. Runs execute in parallel and are
/// merged in configuration order.
pub fn cmd_mc_train(cfg: &RunConfig) -> Result<TrainReport, CliError> {
    cfg.validate()?;
    let runs = grid(cfg)
        .into_par_iter()
        .map(|(s, r)| run_mc(cfg, s, r))
        .collect::<Result<Vec<_>, _>>()?;
    finish(cfg, runs)
}

/// Train/test sets for one seed of a ReLU experiment, before any symmetrization.
pub fn relu_data(cfg: &RunConfig, seed: u64) -> Result<(LabeledSet, LabeledSet), CliError> {
    let mut rng = SeededRng::new(seed, DATA_STREAM);
    match &cfg.data {
        DataSource::Synthetic => {
            let task = gen_planted_teacher(
                cfg.input_dim,
                cfg.teacher_width,
                cfg.n_train,
                cfg.n_test,
                cfg.input,
                cfg.noise,
                &mut rng,
            )?;
            Ok((task.train, task.test))
        }
        DataSource::Idx {
            images,
            labels,
            test_images,
            test_labels,
        } => {
            let train = load_binary_pair(images, labels, cfg.class_a, cfg.class_b)?;
            match (test_images, test_labels) {
                (Some(ti), Some(tl)) => Ok((train, load_binary_pair(ti, tl, cfg.class_a, cfg.class_b)?)),
                (None, None) => Ok(split(&train, 0.1, &mut rng)?),
                _ => Err(CliError::Config("give both test_images and test_labels, or neither".into())),
            }
        }
        DataSource::MovieLens(_) => Err(CliError::Config("relu-train needs synthetic or IDX data".into())),
    }
}

/// One ReLU run; with `symmetrize` set the training inputs get random signs first.
pub fn run_relu(cfg: &RunConfig, seed: u64, rate: f64) -> Result<RunResult, CliError> {
    let (mut train, test) = relu_data(cfg, seed)?;
    if cfg.symmetrize {
        train = symmetrize(&train, &mut SeededRng::new(seed, SYM_STREAM));
    }
    let dropout = DropoutConfig::new(rate).map_err(|e| CliError::Config(e.to_string()))?;
    let mut rng = SeededRng::new(seed, TRAIN_STREAM);
    let init = he_init_net(train.input_dim(), cfg.width, train.output_dim(), &mut rng);
    let report = ReportOptions {
        beta_directions: cfg.beta_dirs,
        capacity: true,
    };
    let test = (!test.is_empty()).then_some(&test);
    let run_id = cfg.run_id(seed, rate);
    match sgd_dropout_train_relu(init, &train, test, &dropout, &params(cfg), &report, &mut rng, &run_id) {
        Ok(out) => Ok(RunResult {
            seed,
            rate,
            records: out.records,
            diverged: false,
        }),
        Err(RelunetError::Diverged { records, .. }) => Ok(RunResult {
            seed,
            rate,
            records,
            diverged: true,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Trains every `(seed, rate)` pair of a ReLU experiment, recording capacity columns per epoch.
pub fn cmd_relu_train(cfg: &RunConfig) -> Result<TrainReport, CliError> {
    cfg.validate()?;
    let runs = grid(cfg)
        .into_par_iter()
        .map(|(s, r)| run_relu(cfg, s, r))
        .collect::<Result<Vec<_>, _>>()?;
    finish(cfg, runs)
}
