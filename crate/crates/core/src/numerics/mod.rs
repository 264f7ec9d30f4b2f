//! Dense linear algebra and randomness substrate.

mod matrix;
pub mod mc;
mod rng;
mod rotation;
mod svd;

use thiserror::Error;

pub use matrix::{dot, norm, Matrix};
pub use mc::{estimate_mean, McEstimate};
pub use rng::SeededRng;
pub use rotation::{equal_diagonal_rotation, Givens};
pub use svd::{
    nuclear_norm, pseudo_inverse, rank, spectral_norm, svd, SvdResult, DEFAULT_RANK_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `‖X‖_{C†} = sqrt(Σᵢ xᵢᵀ C† xᵢ)` over the columns `xᵢ` of `x`.
pub fn mahalanobis_data_norm(x: &Matrix, c_pinv: &Matrix) -> Result<f64, NumericsError> {
    let d = x.rows();
    if c_pinv.shape() != (d, d) {
        return Err(NumericsError::Shape(format!(
            "data has dimension {d} but the weight matrix is {}x{}",
            c_pinv.rows(),
            c_pinv.cols()
        )));
    }
    x.ensure_finite()?;
    c_pinv.ensure_finite()?;
    let scale = c_pinv.max_abs().max(1.0);
    if c_pinv.asymmetry() > 1e-9 * scale {
        return Err(NumericsError::NotPsd(format!(
            "weight matrix asymmetry {:.3e}",
            c_pinv.asymmetry()
        )));
    }
    let mut total = 0.0;
    for i in 0..x.cols() {
        let xi = x.column(i);
        let q = dot(&xi, &c_pinv.matvec(&xi));
        if q < -1e-9 {
            return Err(NumericsError::NotPsd(format!(
                "quadratic form of column {i} is {q:.3e}"
            )));
        }
        total += q.max(0.0);
    }
    Ok(total.sqrt())
}

/// Eigenvalues of a symmetric PSD matrix, read off as its singular values (descending).
pub fn psd_spectrum(c: &Matrix) -> Result<Vec<f64>, NumericsError> {
    Ok(svd(c)?.singular_values)
}
