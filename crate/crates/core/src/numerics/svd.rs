//! One-sided (Hestenes) Jacobi SVD and the norms and pseudo-inverse built on it.

use super::matrix::{dot, Matrix};
use super::NumericsError;

/// Relative cutoff below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Thin SVD: `left` is `rows×k`, `right` is `cols×k`, `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left: Matrix,
    pub singular_values: Vec<f64>,
    pub right: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        self.left
            .scale_cols(&self.singular_values)
            .matmul_transpose(&self.right)
    }

    /// Number of singular values above `tol · σ₁`.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > tol * top)
            .count()
    }
}

/// Singular value decomposition by cyclic one-sided Jacobi sweeps.
///
/// Columns `p < q` are rotated whenever their Gram entry exceeds `ε·sqrt(‖w_p‖²‖w_q‖²)`; this
/// relative test also drives the off-diagonal Gram entries below `1e-12·‖M‖_F²`.
pub fn svd(m: &Matrix) -> Result<SvdResult, NumericsError> {
    m.ensure_finite()?;
    if m.rows() == 0 || m.cols() == 0 {
        return Err(NumericsError::Shape(format!(
            "svd needs a non-empty matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(SvdResult {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        });
    }
    Ok(svd_tall(m))
}

/// Requires `rows >= cols`.
fn svd_tall(m: &Matrix) -> SvdResult {
    let (rows, n) = m.shape();
    // Work on columns stored contiguously.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let fro_sq: f64 = m.as_slice().iter().map(|x| x * x).sum();
    let abs_floor = 1e-300_f64.max(fro_sq * 1e-32);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma.abs() < abs_floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = w.iter().map(|c| dot(c, c).sqrt()).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));

    let top = order.first().map_or(0.0, |o| o.1);
    let cutoff = top * 1e-14;
    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut right_cols = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &(j, s)) in order.iter().enumerate() {
        right_cols.push(v[j].clone());
        if s > cutoff && s > 0.0 {
            left_cols.push(w[j].iter().map(|x| x / s).collect());
            sigma.push(s);
        } else {
            left_cols.push(vec![0.0; rows]);
            sigma.push(0.0);
            missing.push(slot);
        }
    }
    complete_orthonormal(&mut left_cols, &missing);
    reorthogonalize(&mut left_cols);

    SvdResult {
        left: Matrix::from_columns(&left_cols),
        singular_values: sigma,
        right: Matrix::from_columns(&right_cols),
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let dim = cols[0].len();
    let mut candidate = 0usize;
    for &slot in missing {
        loop {
            assert!(candidate < dim, "cannot complete orthonormal basis");
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (k, other) in cols.iter().enumerate() {
                    if k == slot {
                        continue;
                    }
                    let proj = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > 1e-8 {
                cols[slot] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

fn reorthogonalize(cols: &mut [Vec<f64>]) {
    for j in 0..cols.len() {
        for k in 0..j {
            let proj = dot(&cols[j], &cols[k]);
            let (head, tail) = cols.split_at_mut(j);
            for (x, o) in tail[0].iter_mut().zip(&head[k]) {
                *x -= proj * o;
            }
        }
        let nrm = dot(&cols[j], &cols[j]).sqrt();
        if nrm > 0.0 {
            cols[j].iter_mut().for_each(|x| *x /= nrm);
        }
    }
}

/// `‖M‖_* = Σ σᵢ`.
pub fn nuclear_norm(m: &Matrix) -> Result<f64, NumericsError> {
    Ok(svd(m)?.singular_values.iter().sum())
}

/// `‖M‖ = σ₁`.
pub fn spectral_norm(m: &Matrix) -> Result<f64, NumericsError> {
    Ok(svd(m)?.singular_values.first().copied().unwrap_or(0.0))
}

/// Numerical rank with the default relative cutoff.
pub fn rank(m: &Matrix) -> Result<usize, NumericsError> {
    Ok(svd(m)?.rank(DEFAULT_RANK_TOL))
}

/// Moore-Penrose pseudo-inverse; singular values `≤ tol·σ₁` are treated as zero.
pub fn pseudo_inverse(m: &Matrix, tol: f64) -> Result<Matrix, NumericsError> {
    if tol < 0.0 || !tol.is_finite() {
        return Err(NumericsError::InvalidArgument(format!(
            "pseudo-inverse tolerance must be a finite non-negative number, got {tol}"
        )));
    }
    let s = svd(m)?;
    let top = s.singular_values.first().copied().unwrap_or(0.0);
    let inv: Vec<f64> = s
        .singular_values
        .iter()
        .map(|&x| if top > 0.0 && x > tol * top { 1.0 / x } else { 0.0 })
        .collect();
    Ok(s.right.scale_cols(&inv).matmul_transpose(&s.left))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(q: &Matrix) -> f64 {
        q.transpose()
            .matmul(q)
            .sub(&Matrix::identity(q.cols()))
            .frobenius_norm()
    }

    #[test]
    fn diagonal_singular_values_are_sorted() {
        let s = svd(&Matrix::from_diag(&[3.0, 4.0])).unwrap();
        assert_eq!(s.singular_values.len(), 2);
        assert!((s.singular_values[0] - 4.0).abs() < 1e-15);
        assert!((s.singular_values[1] - 3.0).abs() < 1e-15);
        assert!((nuclear_norm(&Matrix::from_diag(&[3.0, 4.0])).unwrap() - 7.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = svd(&Matrix::identity(3)).unwrap();
        for sv in s.singular_values {
            assert!((sv - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rank_one_nuclear_norm_is_product_of_norms() {
        // ‖a‖ = 2, ‖b‖ = 3.
        let a = [2.0 / 3f64.sqrt(); 3];
        let b = [0.0, 3.0 / 2f64.sqrt(), -3.0 / 2f64.sqrt()];
        let m = Matrix::from_fn(3, 3, |i, j| a[i] * b[j]);
        assert!((nuclear_norm(&m).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(rank(&m).unwrap(), 1);
    }

    #[test]
    fn zero_matrix_gets_complete_bases() {
        let s = svd(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(s.singular_values, vec![0.0, 0.0]);
        assert!(orthonormality_error(&s.left) < 1e-12);
        assert!(orthonormality_error(&s.right) < 1e-12);
        assert_eq!(s.rank(DEFAULT_RANK_TOL), 0);
    }

    #[test]
    fn wide_matrix_is_handled_through_transpose() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.0, -1.0], &[0.5, 0.0, 3.0, 1.0]]);
        let s = svd(&m).unwrap();
        assert_eq!(s.left.shape(), (2, 2));
        assert_eq!(s.right.shape(), (4, 2));
        assert!(s.reconstruct().sub(&m).frobenius_norm() < 1e-12 * m.frobenius_norm());
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut m = Matrix::identity(2);
        m[(0, 1)] = f64::INFINITY;
        assert!(matches!(svd(&m), Err(NumericsError::NonFinite(_))));
        assert!(matches!(svd(&Matrix::zeros(0, 3)), Err(NumericsError::Shape(_))));
    }

    #[test]
    fn pseudo_inverse_small_cases() {
        let p = pseudo_inverse(&Matrix::from_diag(&[2.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert!(p.sub(&Matrix::from_diag(&[0.5, 0.0])).max_abs() < 1e-15);
        let i = pseudo_inverse(&Matrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert!(i.sub(&Matrix::identity(3)).max_abs() < 1e-15);
        assert!(pseudo_inverse(&Matrix::identity(2), -1.0).is_err());
        let z = pseudo_inverse(&Matrix::zeros(2, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(z, Matrix::zeros(3, 2));
    }
}
