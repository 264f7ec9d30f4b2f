//! Dropout rate bookkeeping and trainer settings shared by both model families.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::numerics::SeededRng;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("dropout rate must lie in [0, 1), got {0}")]
pub struct InvalidRate(pub f64);

/// Dropout rate `p` with its derived regularization weight `λ = p/(1−p)` and the
/// survivor scale `1/(1−p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutConfig {
    rate: f64,
    lambda: f64,
    keep_scale: f64,
}

impl DropoutConfig {
    pub fn new(rate: f64) -> Result<Self, InvalidRate> {
        if !(0.0..1.0).contains(&rate) {
            return Err(InvalidRate(rate));
        }
        Ok(Self {
            rate,
            lambda: rate / (1.0 - rate),
            keep_scale: 1.0 / (1.0 - rate),
        })
    }

    pub fn none() -> Self {
        Self {
            rate: 0.0,
            lambda: 0.0,
            keep_scale: 1.0,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn keep_scale(&self) -> f64 {
        self.keep_scale
    }

    /// Same rate, with `λ` multiplied by `factor`. Only used to check that audits notice a wrong `λ`.
    pub fn with_lambda_scaled(mut self, factor: f64) -> Self {
        self.lambda *= factor;
        self
    }

    /// One diagonal entry of `B`: `keep_scale` with probability `1 − p`, else 0.
    #[inline]
    pub fn sample_gate(&self, rng: &mut SeededRng) -> f64 {
        if self.rate == 0.0 || rng.uniform() >= self.rate {
            self.keep_scale
        } else {
            0.0
        }
    }

    pub fn fill_mask(&self, rng: &mut SeededRng, mask: &mut [f64]) {
        for m in mask.iter_mut() {
            *m = self.sample_gate(rng);
        }
    }
}

/// How a trainer realizes dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Fresh Bernoulli masks on every minibatch example.
    SampledMask,
    /// Deterministic descent on the closed form `L̂ + λR̂`.
    ExplicitPenalty,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::SampledMask => "mask",
            TrainMode::ExplicitPenalty => "penalty",
        })
    }
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mask" | "sampled-mask" => Ok(TrainMode::SampledMask),
            "penalty" | "explicit-penalty" => Ok(TrainMode::ExplicitPenalty),
            other => Err(format!("unknown mode `{other}` (expected mask or penalty)")),
        }
    }
}

/// Minibatch SGD settings. An epoch is `⌈n / batch_size⌉` steps, minibatches drawn with
/// replacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub mode: TrainMode,
}

impl TrainParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return Err("batch size must be at least 1".into());
        }
        if self.epochs == 0 {
            return Err("epochs must be at least 1".into());
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }
}

/// Training stops once the loss exceeds this or becomes non-finite.
pub const DIVERGENCE_LOSS: f64 = 1e6;

pub fn is_diverged(loss: f64) -> bool {
    !loss.is_finite() || loss > DIVERGENCE_LOSS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let d = DropoutConfig::new(0.5).unwrap();
        assert_eq!(d.lambda(), 1.0);
        assert_eq!(d.keep_scale(), 2.0);
        let d = DropoutConfig::new(0.2).unwrap();
        assert_eq!(d.lambda(), 0.2 / 0.8);
        assert_eq!(d.keep_scale(), 1.0 / 0.8);
        assert_eq!(DropoutConfig::new(0.0).unwrap(), DropoutConfig::none());
    }

    #[test]
    fn invalid_rates() {
        assert!(DropoutConfig::new(1.0).is_err());
        assert!(DropoutConfig::new(-0.1).is_err());
        assert!(DropoutConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn gates_have_unit_mean_and_lambda_variance() {
        let d = DropoutConfig::new(0.3).unwrap();
        let mut rng = SeededRng::from_seed(5);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| d.sample_gate(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01);
        assert!((var - d.lambda()).abs() < 0.01);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("mask".parse::<TrainMode>().unwrap(), TrainMode::SampledMask);
        assert_eq!("penalty".parse::<TrainMode>().unwrap(), TrainMode::ExplicitPenalty);
        assert!("sgd".parse::<TrainMode>().is_err());
    }
}
