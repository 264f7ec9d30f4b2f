use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::induced::expected_regularizer;
use super::{FactorPair, MeasurementModel, SensingError};
use crate::numerics::{Matrix, SeededRng};

/// Mean absolute deviation `|R̂ − R|` at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub mean_abs_deviation: f64,
    /// `mean_abs_deviation · √n`; roughly constant under `1/√n` concentration.
    pub scaled_deviation: f64,
    pub max_abs_deviation: f64,
    pub gamma_sq: f64,
}

/// `γ = ‖Uᵀ‖_{2,∞}·‖V‖_{∞,∞}`: largest row norm of `U` times largest entry of `V`.
pub fn gamma(f: &FactorPair) -> f64 {
    let row_max = (0..f.u.rows())
        .map(|i| f.u.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    row_max * f.v.max_abs()
}

/// Resamples indicator observations and measures how far the empirical regularizer strays
/// from its exact expectation.
///
/// Resample `k` at grid position `g` uses `rng.derive(g·resamples + k)`.
pub fn concentration_audit(
    f: &FactorPair,
    model: &MeasurementModel,
    n_grid: &[usize],
    resamples: usize,
    rng: &SeededRng,
) -> Result<Vec<ConcentrationRow>, SensingError> {
    let MeasurementModel::Indicator {
        row_probs,
        col_probs,
    } = model
    else {
        return Err(SensingError::InvalidArgument(
            "concentration audit needs an indicator measurement model".into(),
        ));
    };
    if resamples == 0 || n_grid.contains(&0) {
        return Err(SensingError::InvalidArgument("sample sizes and resample count must be positive".into()));
    }
    let exact = expected_regularizer(f, model)?;
    let rows = WeightedIndex::new(row_probs).map_err(|e| SensingError::InvalidArgument(e.to_string()))?;
    let cols = WeightedIndex::new(col_probs).map_err(|e| SensingError::InvalidArgument(e.to_string()))?;
    // Per-cell value Σ_w U(a,w)²V(b,w)².
    let cell = Matrix::from_fn(f.rows(), f.cols(), |a, b| {
        f.u.row(a).iter().zip(f.v.row(b)).map(|(x, y)| x * x * y * y).sum()
    });
    let g = gamma(f);

    let mut out = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for k in 0..resamples {
            let mut r = rng.derive((gi * resamples + k) as u64);
            let mut acc = 0.0;
            for _ in 0..n {
                acc += cell[(rows.sample(&mut r), cols.sample(&mut r))];
            }
            let dev = (acc / n as f64 - exact).abs();
            total += dev;
            worst = worst.max(dev);
        }
        let mean = total / resamples as f64;
        out.push(ConcentrationRow {
            n,
            mean_abs_deviation: mean,
            scaled_deviation: mean * (n as f64).sqrt(),
            max_abs_deviation: worst,
            gamma_sq: g * g,
        });
    }
    Ok(out)
}
