//! Monte-Carlo mean estimation with scheduling-independent results.

use rayon::prelude::*;

use super::rng::SeededRng;

/// Trials sharing one derived stream.
pub const BLOCK: usize = 1024;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl McEstimate {
    /// `|mean − expected| / stderr`; infinite when the estimate is exact but wrong.
    pub fn z_score(&self, expected: f64) -> f64 {
        let dev = (self.mean - expected).abs();
        if self.stderr > 0.0 {
            dev / self.stderr
        } else if dev <= 1e-12 * expected.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// True when the expected value lies within `k` standard errors (or exactly on it).
    pub fn covers(&self, expected: f64, k: f64) -> bool {
        self.z_score(expected) <= k
    }
}

#[derive(Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// Estimates `E[f]` over `trials` draws.
///
/// Trials are grouped into blocks of [`BLOCK`]; block `b` draws from `rng.derive(b)`. Blocks run
/// in parallel but are merged in index order, so the result depends only on `(rng, trials)`.
pub fn estimate_mean<F>(rng: &SeededRng, trials: usize, f: F) -> McEstimate
where
    F: Fn(&mut SeededRng) -> f64 + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let per_block: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut local = rng.derive(b as u64);
            let len = BLOCK.min(trials - b * BLOCK);
            let mut m = Moments {
                count: 0.0,
                mean: 0.0,
                m2: 0.0,
            };
            for _ in 0..len {
                let x = f(&mut local);
                m.count += 1.0;
                let delta = x - m.mean;
                m.mean += delta / m.count;
                m.m2 += delta * (x - m.mean);
            }
            m
        })
        .collect();
    let total = per_block.into_iter().fold(
        Moments {
            count: 0.0,
            mean: 0.0,
            m2: 0.0,
        },
        Moments::merge,
    );
    let stderr = if total.count > 1.0 {
        (total.m2 / (total.count - 1.0) / total.count).sqrt()
    } else {
        0.0
    };
    McEstimate {
        mean: total.mean,
        stderr,
        trials,
    }
}
