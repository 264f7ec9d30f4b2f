//! Rademacher and generalization bounds for the dropout network class.

use super::RelunetError;

fn check_beta(beta: f64) -> Result<(), RelunetError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(RelunetError::InvalidArgument(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

fn check_common(alpha: f64, x_mahal: f64, n: usize, delta: f64) -> Result<(), RelunetError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(RelunetError::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(RelunetError::InvalidArgument("sample size must be at least 1".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(RelunetError::InvalidArgument(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    if !(x_mahal >= 0.0 && x_mahal.is_finite()) {
        return Err(RelunetError::InvalidArgument(format!("data norm must be finite and non-negative, got {x_mahal}")));
    }
    Ok(())
}

/// Empirical form `2α‖X‖_{C†} / (n√β)`.
pub fn rademacher_bound(alpha: f64, beta: f64, x_mahal: f64, n: usize) -> Result<f64, RelunetError> {
    check_beta(beta)?;
    check_common(alpha, x_mahal, n, 0.5)?;
    Ok(2.0 * alpha * x_mahal / (n as f64 * beta.sqrt()))
}

/// Expected form `2α·sqrt(rank(C) / (βn))`.
pub fn rademacher_bound_expected(alpha: f64, beta: f64, rank_c: usize, n: usize) -> Result<f64, RelunetError> {
    check_beta(beta)?;
    check_common(alpha, 0.0, n, 0.5)?;
    Ok(2.0 * alpha * (rank_c as f64 / (beta * n as f64)).sqrt())
}

fn confidence(delta_arg: f64, n: usize) -> f64 {
    (delta_arg.ln() / (2.0 * n as f64)).sqrt()
}

/// `L̂ + 16α‖X‖_{C†}/(√β·n) + 12·sqrt(log(2/δ)/(2n))` for the clipped network.
pub fn gen_bound_regression(
    train_loss: f64,
    alpha: f64,
    beta: f64,
    x_mahal: f64,
    n: usize,
    delta: f64,
) -> Result<f64, RelunetError> {
    check_beta(beta)?;
    check_common(alpha, x_mahal, n, delta)?;
    let nf = n as f64;
    Ok(train_loss + 16.0 * alpha * x_mahal / (beta.sqrt() * nf) + 12.0 * confidence(2.0 / delta, n))
}

/// `2L̂_{S'} + 46α'‖X‖_{C†}/n + 24·sqrt(log(2/δ)/(2n))`, with `L̂_{S'}` measured on symmetrized data.
pub fn gen_bound_symmetrized(
    train_loss_sym: f64,
    alpha_prime: f64,
    x_mahal: f64,
    n: usize,
    delta: f64,
) -> Result<f64, RelunetError> {
    check_common(alpha_prime, x_mahal, n, delta)?;
    Ok(2.0 * train_loss_sym + 46.0 * alpha_prime * x_mahal / n as f64 + 24.0 * confidence(2.0 / delta, n))
}

/// Upper bound on `P{y·g(x) < 0}`.
///
/// Plain: `L̂ + 8α‖X‖_{C†}/(√β·n) + 4·sqrt(log(1/δ)/(2n))`. Symmetrized (`alpha` is `α'`, `beta`
/// ignored): `2L̂_{S'} + 23α'‖X‖_{C†}/n + 8·sqrt(log(1/δ)/(2n))`.
pub fn gen_bound_classification(
    train_loss: f64,
    alpha: f64,
    beta: f64,
    x_mahal: f64,
    n: usize,
    delta: f64,
    symmetrized: bool,
) -> Result<f64, RelunetError> {
    check_common(alpha, x_mahal, n, delta)?;
    let nf = n as f64;
    if symmetrized {
        return Ok(2.0 * train_loss + 23.0 * alpha * x_mahal / nf + 8.0 * confidence(1.0 / delta, n));
    }
    check_beta(beta)?;
    Ok(train_loss + 8.0 * alpha * x_mahal / (beta.sqrt() * nf) + 4.0 * confidence(1.0 / delta, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_alpha() {
        assert_eq!(rademacher_bound(0.0, 0.5, 3.0, 10).unwrap(), 0.0);
        assert_eq!(rademacher_bound_expected(0.0, 0.5, 3, 10).unwrap(), 0.0);
        // log(2/δ) = 2n makes the confidence factor exactly 1.
        let n = 8;
        let delta = 2.0 * (-(2.0 * n as f64)).exp();
        assert!((gen_bound_regression(0.1, 0.0, 1.0, 1.0, n, delta).unwrap() - 12.1).abs() < 1e-12);
        assert!((gen_bound_symmetrized(0.1, 0.0, 1.0, n, delta).unwrap() - 24.2).abs() < 1e-12);
    }

    #[test]
    fn whitened_forms_agree() {
        let n = 50;
        let a = rademacher_bound(1.3, 1.0, (n as f64).sqrt(), n).unwrap();
        assert!((a - 2.0 * 1.3 / (n as f64).sqrt()).abs() < 1e-15);
        let b = rademacher_bound_expected(1.3, 1.0, 1, n).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn quarter_beta_doubles_middle_term() {
        let base = gen_bound_regression(0.0, 0.0, 1.0, 4.0, 100, 0.1).unwrap();
        let g1 = gen_bound_regression(0.0, 1.0, 1.0, 4.0, 100, 0.1).unwrap() - base;
        let g4 = gen_bound_regression(0.0, 1.0, 0.25, 4.0, 100, 0.1).unwrap() - base;
        assert!((g4 / g1 - 2.0).abs() < 1e-12);
        assert!(gen_bound_regression(0.0, 1.0, 0.0, 4.0, 100, 0.1).is_err());
        assert!(gen_bound_classification(0.0, 1.0, 0.0, 4.0, 100, 0.1, true).is_ok());
    }
}
