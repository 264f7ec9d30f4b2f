//! Experiment data sources and the metrics CSV.

mod idx;
mod movielens;
mod records;
mod synthetic;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::numerics::SeededRng;
use crate::relunet::{LabeledSet, RelunetError};
use crate::sensing::{SensingError, SensingSample};

pub use idx::{load_binary_pair, parse_idx, parse_idx_bytes, IdxTensor, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use movielens::{parse_movielens, parse_movielens_str, MovieLens};
pub use records::{
    format_float, read_records, read_records_from, write_records, write_records_to, ExperimentRecord, RECORD_HEADER,
};
pub use synthetic::{
    gen_completion_task, gen_low_rank, gen_planted_teacher, planted_task_from_teacher, sample_indicator_observations,
    CompletionTask, InputDist, RegressionTask,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed file: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Relunet(#[from] RelunetError),
}

/// Data sets that can be divided by index.
pub trait Splittable: Sized {
    fn size(&self) -> usize;
    fn pick(&self, indices: &[usize]) -> Self;
}

impl Splittable for SensingSample {
    fn size(&self) -> usize {
        self.len()
    }

    fn pick(&self, indices: &[usize]) -> Self {
        self.subset(indices)
    }
}

impl Splittable for LabeledSet {
    fn size(&self) -> usize {
        self.len()
    }

    fn pick(&self, indices: &[usize]) -> Self {
        self.subset(indices)
    }
}

/// Random `(train, test)` partition with `⌊n·f⌋` test items.
pub fn split<T: Splittable>(data: &T, test_fraction: f64, rng: &mut SeededRng) -> Result<(T, T), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = data.size();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let n_test = (n as f64 * test_fraction).floor() as usize;
    let (test, train) = perm.split_at(n_test);
    Ok((data.pick(train), data.pick(test)))
}
