//! Induced regularizer `Θ(M) = min_{UVᵀ=M} R(U,V)` and the factorization attaining it.

use super::{FactorPair, MeasurementModel, SensingError};
use crate::numerics::{equal_diagonal_rotation, svd, Matrix, DEFAULT_RANK_TOL};

fn check_shape(m: &Matrix, model: &MeasurementModel) -> Result<(), SensingError> {
    if m.shape() != model.shape() {
        return Err(SensingError::Shape(format!(
            "matrix is {}x{} but the measurement model is {}x{}",
            m.rows(),
            m.cols(),
            model.shape().0,
            model.shape().1
        )));
    }
    Ok(())
}

/// Expected explicit regularizer `R(U,V) = E_A R̂(U,V)`, computed exactly.
///
/// Gaussian: `Σᵢ ‖uᵢ‖²‖vᵢ‖²`. Indicator: `Σᵢ ‖diag(√p)uᵢ‖²‖diag(√q)vᵢ‖²`.
pub fn expected_regularizer(f: &FactorPair, model: &MeasurementModel) -> Result<f64, SensingError> {
    if (f.rows(), f.cols()) != model.shape() {
        return Err(SensingError::Shape(format!(
            "factors describe a {}x{} matrix but the model is {}x{}",
            f.rows(),
            f.cols(),
            model.shape().0,
            model.shape().1
        )));
    }
    let (ur, vr) = weighted_factors(f, model);
    Ok((0..f.width())
        .map(|i| ur.column_norm_sq(i) * vr.column_norm_sq(i))
        .sum())
}

fn weighted_factors(f: &FactorPair, model: &MeasurementModel) -> (Matrix, Matrix) {
    match model {
        MeasurementModel::Gaussian { .. } => (f.u.clone(), f.v.clone()),
        MeasurementModel::Indicator {
            row_probs,
            col_probs,
        } => (f.u.scale_rows(&sqrt_all(row_probs)), f.v.scale_rows(&sqrt_all(col_probs))),
    }
}

fn sqrt_all(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| x.sqrt()).collect()
}

/// `diag(√p)·M·diag(√q)` (or `M` itself under Gaussian sensing).
pub fn weighted_matrix(m: &Matrix, model: &MeasurementModel) -> Result<Matrix, SensingError> {
    check_shape(m, model)?;
    Ok(match model {
        MeasurementModel::Gaussian { .. } => m.clone(),
        MeasurementModel::Indicator {
            row_probs,
            col_probs,
        } => m.scale_rows(&sqrt_all(row_probs)).scale_cols(&sqrt_all(col_probs)),
    })
}

fn check_width(m: &Matrix, d1: usize) -> Result<(), SensingError> {
    if d1 == 0 {
        return Err(SensingError::InvalidArgument("factor width must be at least 1".into()));
    }
    let r = svd(m)?.rank(DEFAULT_RANK_TOL);
    if r > d1 {
        return Err(SensingError::InvalidArgument(format!(
            "a width-{d1} factorization cannot represent a rank-{r} matrix"
        )));
    }
    Ok(())
}

/// `Θ(M)` for either measurement model: `‖M̃‖_*² / d1` with `M̃` from [`weighted_matrix`].
pub fn induced_regularizer(m: &Matrix, model: &MeasurementModel, d1: usize) -> Result<f64, SensingError> {
    check_width(m, d1)?;
    let nuc: f64 = svd(&weighted_matrix(m, model)?)?.singular_values.iter().sum();
    Ok(nuc * nuc / d1 as f64)
}

/// `Θ(M) = ‖M‖_*² / d1` under standard Gaussian sensing.
pub fn induced_regularizer_gaussian(m: &Matrix, d1: usize) -> Result<f64, SensingError> {
    induced_regularizer(
        m,
        &MeasurementModel::Gaussian {
            rows: m.rows(),
            cols: m.cols(),
        },
        d1,
    )
}

/// `Θ(M) = ‖diag(√p)·M·diag(√q)‖_*² / d1` under indicator sensing.
pub fn induced_regularizer_weighted(
    m: &Matrix,
    row_probs: &[f64],
    col_probs: &[f64],
    d1: usize,
) -> Result<f64, SensingError> {
    let model = MeasurementModel::indicator(row_probs.to_vec(), col_probs.to_vec())?;
    induced_regularizer(m, &model, d1)
}

/// Factorization `UVᵀ = M` whose expected regularizer equals `Θ(M)`.
///
/// With `M̃ = AΣBᵀ` and `Q` equalizing the diagonal of `QᵀΣQ` (spectrum zero-padded to `d1`):
/// `U = diag(√p)⁻¹ A Σ^{1/2} Q`, `V = diag(√q)⁻¹ B Σ^{1/2} Q`. Every column then carries the same
/// weighted norm product `‖M̃‖_* / d1`.
pub fn equalized_minimizer(m: &Matrix, model: &MeasurementModel, d1: usize) -> Result<FactorPair, SensingError> {
    check_width(m, d1)?;
    let (inv_row, inv_col) = match model {
        MeasurementModel::Gaussian { .. } => (vec![1.0; m.rows()], vec![1.0; m.cols()]),
        MeasurementModel::Indicator {
            row_probs,
            col_probs,
        } => {
            if row_probs.iter().chain(col_probs).any(|&p| p <= 0.0) {
                return Err(SensingError::InvalidArgument(
                    "equalized factors need strictly positive row and column probabilities".into(),
                ));
            }
            (
                row_probs.iter().map(|p| 1.0 / p.sqrt()).collect(),
                col_probs.iter().map(|q| 1.0 / q.sqrt()).collect(),
            )
        }
    };
    let dec = svd(&weighted_matrix(m, model)?)?;
    let sigma: Vec<f64> = (0..d1)
        .map(|i| dec.singular_values.get(i).copied().unwrap_or(0.0))
        .collect();
    let root: Vec<f64> = sigma.iter().map(|s| s.sqrt()).collect();
    let q = equal_diagonal_rotation(&sigma);
    let left = dec.left.resize_cols(d1).scale_cols(&root).matmul(&q);
    let right = dec.right.resize_cols(d1).scale_cols(&root).matmul(&q);
    FactorPair::new(left.scale_rows(&inv_row), right.scale_rows(&inv_col))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_theta_of_diagonal() {
        let theta = induced_regularizer_gaussian(&Matrix::from_diag(&[3.0, 4.0]), 2).unwrap();
        assert!((theta - 24.5).abs() < 1e-12);
        assert_eq!(induced_regularizer_gaussian(&Matrix::zeros(3, 2), 1).unwrap(), 0.0);
    }

    #[test]
    fn too_narrow_width_is_rejected() {
        assert!(matches!(
            induced_regularizer_gaussian(&Matrix::identity(3), 2),
            Err(SensingError::InvalidArgument(_))
        ));
        assert!(induced_regularizer_gaussian(&Matrix::identity(3), 0).is_err());
    }

    #[test]
    fn uniform_weighted_theta_of_identity() {
        let theta = induced_regularizer_weighted(&Matrix::identity(2), &[0.5, 0.5], &[0.5, 0.5], 2).unwrap();
        assert!((theta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diag_two_zero_equalizes_to_unit_products() {
        let model = MeasurementModel::Gaussian { rows: 2, cols: 2 };
        let f = equalized_minimizer(&Matrix::from_diag(&[2.0, 0.0]), &model, 2).unwrap();
        for i in 0..2 {
            let prod = (f.u.column_norm_sq(i) * f.v.column_norm_sq(i)).sqrt();
            assert!((prod - 1.0).abs() < 1e-12, "{prod}");
        }
        assert!(f.product().sub(&Matrix::from_diag(&[2.0, 0.0])).max_abs() < 1e-12);
    }

    #[test]
    fn rank_one_single_factor() {
        let m = Matrix::from_fn(3, 2, |i, j| [1.0, -2.0, 0.5][i] * [3.0, 1.0][j]);
        let model = MeasurementModel::Gaussian { rows: 3, cols: 2 };
        let f = equalized_minimizer(&m, &model, 1).unwrap();
        let nuc = (1.0f64 + 4.0 + 0.25).sqrt() * 10f64.sqrt();
        let prod = (f.u.column_norm_sq(0) * f.v.column_norm_sq(0)).sqrt();
        assert!((prod - nuc).abs() < 1e-12);
        let r = expected_regularizer(&f, &model).unwrap();
        assert!((r - induced_regularizer(&m, &model, 1).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn zero_probability_blocks_construction() {
        let model = MeasurementModel::indicator(vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert!(equalized_minimizer(&Matrix::identity(2), &model, 2).is_err());
        assert!(induced_regularizer(&Matrix::identity(2), &model, 2).is_ok());
    }
}
