//! Generalization bounds for dropout matrix completion.

use super::SensingError;

fn check_common(alpha: f64, d2: usize, n: usize, delta: f64) -> Result<(), SensingError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SensingError::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(SensingError::InvalidArgument("sample size must be at least 1".into()));
    }
    if d2 < 2 {
        return Err(SensingError::InvalidArgument(format!("row dimension must be at least 2, got {d2}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(SensingError::InvalidArgument(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    Ok(())
}

/// `L̂ + 8·sqrt((2α·d2·log d2 + ¼·log(2/δ)) / n)`, where `α` satisfies `R(U,V) ≤ α/d1`.
pub fn gen_bound_mc(train_loss: f64, alpha: f64, d2: usize, n: usize, delta: f64) -> Result<f64, SensingError> {
    check_common(alpha, d2, n, delta)?;
    let d2f = d2 as f64;
    let inner = (2.0 * alpha * d2f * d2f.ln() + 0.25 * (2.0 / delta).ln()) / n as f64;
    Ok(train_loss + 8.0 * inner.sqrt())
}

/// Optimistic rate `(2K·log(n)³·α·d2·log d2 + 4K·log(1/δ)) / n`.
pub fn gen_bound_optimistic(alpha: f64, d2: usize, n: usize, delta: f64, k_const: f64) -> Result<f64, SensingError> {
    check_common(alpha, d2, n, delta)?;
    if !(k_const > 0.0 && k_const.is_finite()) {
        return Err(SensingError::InvalidArgument(format!("K must be positive, got {k_const}")));
    }
    let d2f = d2 as f64;
    let nf = n as f64;
    Ok((2.0 * k_const * nf.ln().powi(3) * alpha * d2f * d2f.ln() + 4.0 * k_const * (1.0 / delta).ln()) / nf)
}

/// Which assumptions behind the completion bounds hold for a given problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionPreconditions {
    /// `d2 ≥ d0`.
    pub rows_dominate: bool,
    /// `‖M*‖ ≤ 1`; `None` when the ground truth is unknown.
    pub spectral_norm_ok: Option<bool>,
    /// `min p(i)q(k) ≥ log(d2) / (n·sqrt(d2·d0))`.
    pub non_degenerate: bool,
    pub required_min_probability: f64,
}

impl CompletionPreconditions {
    pub fn all_hold(&self) -> bool {
        self.rows_dominate && self.spectral_norm_ok.unwrap_or(true) && self.non_degenerate
    }

    /// Short names of the violated assumptions.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.rows_dominate {
            v.push("d2<d0");
        }
        if self.spectral_norm_ok == Some(false) {
            v.push("spectral_norm>1");
        }
        if !self.non_degenerate {
            v.push("min_pq_too_small");
        }
        v
    }
}

pub fn completion_preconditions(
    d2: usize,
    d0: usize,
    n: usize,
    min_cell_probability: f64,
    truth_spectral_norm: Option<f64>,
) -> CompletionPreconditions {
    let required = (d2 as f64).ln() / (n as f64 * ((d2 * d0) as f64).sqrt());
    CompletionPreconditions {
        rows_dominate: d2 >= d0,
        spectral_norm_ok: truth_spectral_norm.map(|s| s <= 1.0),
        non_degenerate: min_cell_probability >= required,
        required_min_probability: required,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_zero_leaves_only_confidence_term() {
        // ¼·log(2/δ) = 1 when δ = 2e⁻⁴.
        let delta = 2.0 * (-4.0f64).exp();
        let b = gen_bound_mc(0.3, 0.0, 10, 64, delta).unwrap();
        assert!((b - 1.3).abs() < 1e-12);
    }

    #[test]
    fn gap_squared_is_affine_in_alpha() {
        // (gap/8)²·n = 2α·d2·log d2 + ¼·log(2/δ).
        let sq = |a: f64| (gen_bound_mc(0.0, a, 50, 1000, 0.1).unwrap() / 8.0).powi(2) * 1000.0;
        let slope = 2.0 * 50.0 * 50f64.ln();
        assert!((sq(1.0) - sq(0.0) - slope).abs() < 1e-9);
        assert!((sq(2.0) - sq(1.0) - slope).abs() < 1e-9);
    }

    #[test]
    fn optimistic_unit_case_and_decay() {
        let b = gen_bound_optimistic(0.0, 10, 4, (-1.0f64).exp(), 1.0).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        for n in [32usize, 64, 1000] {
            let a = gen_bound_optimistic(1.0, 20, n, 0.05, 1.0).unwrap();
            let b = gen_bound_optimistic(1.0, 20, 2 * n, 0.05, 1.0).unwrap();
            assert!(b < a, "n={n}");
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(gen_bound_mc(0.0, 1.0, 10, 10, 0.0).is_err());
        assert!(gen_bound_mc(0.0, 1.0, 10, 10, 1.0).is_err());
        assert!(gen_bound_mc(0.0, 1.0, 1, 10, 0.5).is_err());
        assert!(gen_bound_mc(0.0, -1.0, 10, 10, 0.5).is_err());
        assert!(gen_bound_optimistic(1.0, 10, 10, 0.5, 0.0).is_err());
    }

    #[test]
    fn precondition_flags() {
        let ok = completion_preconditions(100, 80, 3200, 1.0 / 8000.0, Some(1.0));
        assert!(ok.all_hold(), "{ok:?}");
        let bad = completion_preconditions(10, 20, 5, 1e-6, Some(2.0));
        assert_eq!(bad.violations(), vec!["d2<d0", "spectral_norm>1", "min_pq_too_small"]);
    }
}
