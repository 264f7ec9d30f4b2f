//! Plane rotations and the equal-diagonal (Schur-Horn) rotation used to equalize factor columns.

use super::matrix::Matrix;

/// Rotation in the `(i, j)` coordinate plane: `G = I` except
/// `G[i][i] = G[j][j] = c`, `G[i][j] = s`, `G[j][i] = -s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Givens {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: f64,
}

impl Givens {
    /// Rotation with `tan θ = t`.
    pub fn from_tan(i: usize, j: usize, t: f64) -> Self {
        let c = 1.0 / (1.0 + t * t).sqrt();
        Self { i, j, c, s: t * c }
    }

    /// `M ← M · G` (mixes columns `i` and `j`).
    pub fn apply_right(&self, m: &mut Matrix) {
        for r in 0..m.rows() {
            let (a, b) = (m[(r, self.i)], m[(r, self.j)]);
            m[(r, self.i)] = self.c * a - self.s * b;
            m[(r, self.j)] = self.s * a + self.c * b;
        }
    }

    /// `M ← Gᵀ · M` (mixes rows `i` and `j`).
    pub fn apply_left_transpose(&self, m: &mut Matrix) {
        for col in 0..m.cols() {
            let (a, b) = (m[(self.i, col)], m[(self.j, col)]);
            m[(self.i, col)] = self.c * a - self.s * b;
            m[(self.j, col)] = self.s * a + self.c * b;
        }
    }

    pub fn to_matrix(&self, n: usize) -> Matrix {
        let mut g = Matrix::identity(n);
        self.apply_right(&mut g);
        g
    }
}

/// Orthogonal `Q` such that every diagonal entry of `Qᵀ diag(σ) Q` equals `Σσ / d`.
///
/// Greedy: pick one index below the mean and one above, then rotate in their plane with the
/// angle that pins the low entry exactly to the mean. The pinned index is never touched again,
/// so at most `d − 1` rotations are applied.
pub fn equal_diagonal_rotation(sigma: &[f64]) -> Matrix {
    let d = sigma.len();
    let mut q = Matrix::identity(d);
    if d <= 1 {
        return q;
    }
    let mut s = Matrix::from_diag(sigma);
    let trace: f64 = sigma.iter().sum();
    let target = trace / d as f64;
    let slack = 1e-15 * trace.abs().max(f64::MIN_POSITIVE);

    let mut pinned = vec![false; d];
    for _ in 0..d - 1 {
        let below = (0..d)
            .filter(|&k| !pinned[k] && s[(k, k)] < target - slack)
            .min_by(|&a, &b| s[(a, a)].total_cmp(&s[(b, b)]));
        let above = (0..d)
            .filter(|&k| !pinned[k] && s[(k, k)] > target + slack)
            .max_by(|&a, &b| s[(a, a)].total_cmp(&s[(b, b)]));
        let (Some(lo), Some(hi)) = (below, above) else {
            break;
        };
        let g = pinning_rotation(&s, lo, hi, target);
        g.apply_left_transpose(&mut s);
        g.apply_right(&mut s);
        g.apply_right(&mut q);
        s[(lo, lo)] = target;
        pinned[lo] = true;
    }
    q
}

/// Rotation in the `(lo, hi)` plane that sends `S[lo][lo]` to `target`.
///
/// With `a = S[lo][lo] < target < b = S[hi][hi]` and `c = S[lo][hi]`, `tan θ` solves
/// `(b − t)τ² − 2cτ + (a − t) = 0`; the discriminant is positive because `(a−t)(b−t) < 0`.
fn pinning_rotation(s: &Matrix, lo: usize, hi: usize, target: f64) -> Givens {
    let a = s[(lo, lo)] - target;
    let b = s[(hi, hi)] - target;
    let c = s[(lo, hi)];
    let disc = (c * c - a * b).sqrt();
    let sign = if c >= 0.0 { 1.0 } else { -1.0 };
    let tau = a / (c + sign * disc);
    Givens::from_tan(lo, hi, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotated_diagonal(sigma: &[f64], q: &Matrix) -> Vec<f64> {
        q.transpose()
            .matmul(&Matrix::from_diag(sigma))
            .matmul(q)
            .diagonal()
    }

    #[test]
    fn two_by_two_is_a_45_degree_rotation() {
        let q = equal_diagonal_rotation(&[2.0, 0.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q[(0, 0)].abs() - h).abs() < 1e-15);
        assert!((q[(0, 1)].abs() - h).abs() < 1e-15);
        for d in rotated_diagonal(&[2.0, 0.0], &q) {
            assert!((d - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_spectrum_needs_no_rotation() {
        assert_eq!(equal_diagonal_rotation(&[0.7; 4]), Matrix::identity(4));
        assert_eq!(equal_diagonal_rotation(&[3.0]), Matrix::identity(1));
        assert_eq!(equal_diagonal_rotation(&[0.0; 3]), Matrix::identity(3));
    }

    #[test]
    fn four_term_spectrum_equalizes_to_mean() {
        let sigma = [5.0, 3.0, 1.0, 0.0];
        let q = equal_diagonal_rotation(&sigma);
        for d in rotated_diagonal(&sigma, &q) {
            assert!((d - 2.25).abs() < 1e-9 * 9.0, "{d}");
        }
        let err = q.transpose().matmul(&q).sub(&Matrix::identity(4)).frobenius_norm();
        assert!(err < 1e-9);
    }

    #[test]
    fn givens_matrix_matches_in_place_application() {
        let g = Givens::from_tan(0, 2, 0.3);
        let mut m = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let expected = m.matmul(&g.to_matrix(3));
        g.apply_right(&mut m);
        assert!(m.sub(&expected).max_abs() < 1e-15);
    }
}
