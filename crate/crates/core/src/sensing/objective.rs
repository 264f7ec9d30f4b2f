use super::{FactorPair, Measurement, Observation, SensingError, SensingSample};
use crate::dropout::DropoutConfig;
use crate::numerics::{estimate_mean, Matrix, McEstimate, SeededRng};

/// Per-factor responses `tᵢ = uᵢᵀ A vᵢ`; their sum is the prediction `⟨UVᵀ, A⟩`.
pub fn factor_terms(f: &FactorPair, obs: &Observation, out: &mut [f64]) {
    debug_assert_eq!(out.len(), f.width());
    match &obs.measurement {
        Measurement::Entry { row, col } => {
            let (u_row, v_row) = (f.u.row(*row), f.v.row(*col));
            for ((t, &a), &b) in out.iter_mut().zip(u_row).zip(v_row) {
                *t = a * b;
            }
        }
        Measurement::Dense(a) => {
            let av = a.matmul(&f.v);
            for (i, t) in out.iter_mut().enumerate() {
                *t = (0..f.rows()).map(|r| f.u[(r, i)] * av[(r, i)]).sum();
            }
        }
    }
}

/// `Ê_j (y_j − ⟨UVᵀ, A⁽ʲ⁾⟩)²`.
pub fn erm_loss(f: &FactorPair, s: &SensingSample) -> Result<f64, SensingError> {
    s.check_factors(f)?;
    let mut t = vec![0.0; f.width()];
    Ok(mean_over(s, |obs| {
        factor_terms(f, obs, &mut t);
        (obs.y - t.iter().sum::<f64>()).powi(2)
    }))
}

/// Squared loss of an explicit matrix estimate (for example a clipped `g(UVᵀ)`).
pub fn erm_loss_of(m: &Matrix, s: &SensingSample) -> Result<f64, SensingError> {
    if m.shape() != (s.rows(), s.cols()) {
        return Err(SensingError::Shape(format!(
            "estimate is {}x{} but the sample is {}x{}",
            m.rows(),
            m.cols(),
            s.rows(),
            s.cols()
        )));
    }
    Ok(mean_over(s, |obs| {
        let pred = match &obs.measurement {
            Measurement::Entry { row, col } => m[(*row, *col)],
            Measurement::Dense(a) => a.as_slice().iter().zip(m.as_slice()).map(|(x, y)| x * y).sum(),
        };
        (obs.y - pred).powi(2)
    }))
}

/// `R̂(U,V) = Σᵢ Ê_j (uᵢᵀ A⁽ʲ⁾ vᵢ)²`. For indicator measurements each term is `U(a,i)²V(b,i)²`.
pub fn explicit_regularizer(f: &FactorPair, s: &SensingSample) -> Result<f64, SensingError> {
    s.check_factors(f)?;
    let mut t = vec![0.0; f.width()];
    Ok(mean_over(s, |obs| {
        factor_terms(f, obs, &mut t);
        t.iter().map(|x| x * x).sum()
    }))
}

/// `L̂ + λR̂`, the expected dropout objective in closed form.
pub fn penalty_objective(f: &FactorPair, s: &SensingSample, d: &DropoutConfig) -> Result<f64, SensingError> {
    Ok(erm_loss(f, s)? + d.lambda() * explicit_regularizer(f, s)?)
}

fn mean_over(s: &SensingSample, mut per_obs: impl FnMut(&Observation) -> f64) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    s.observations().iter().map(&mut per_obs).sum::<f64>() / s.len() as f64
}

/// Monte-Carlo estimate of `Ê_j E_B (y_j − ⟨UBVᵀ, A⁽ʲ⁾⟩)²`.
///
/// Each trial draws an independent mask per observation and averages the squared residuals over
/// the sample, so every trial is an unbiased draw of the dropout objective.
pub fn dropout_objective_mc(
    f: &FactorPair,
    s: &SensingSample,
    d: &DropoutConfig,
    trials: usize,
    rng: &SeededRng,
) -> Result<McEstimate, SensingError> {
    if trials == 0 {
        return Err(SensingError::InvalidArgument("trials must be at least 1".into()));
    }
    s.check_factors(f)?;
    let width = f.width();
    let mut terms = Vec::with_capacity(s.len() * width);
    let mut t = vec![0.0; width];
    for obs in s.observations() {
        factor_terms(f, obs, &mut t);
        terms.extend_from_slice(&t);
    }
    let ys: Vec<f64> = s.observations().iter().map(|o| o.y).collect();
    let n = ys.len().max(1) as f64;
    Ok(estimate_mean(rng, trials, |r| {
        let mut total = 0.0;
        for (y, row) in ys.iter().zip(terms.chunks_exact(width)) {
            let pred: f64 = row.iter().map(|&x| d.sample_gate(r) * x).sum();
            total += (y - pred).powi(2);
        }
        total / n
    }))
}

/// Gradient with respect to both factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub u: Matrix,
    pub v: Matrix,
}

impl Gradient {
    fn zeros(f: &FactorPair) -> Self {
        Self {
            u: Matrix::zeros(f.u.rows(), f.u.cols()),
            v: Matrix::zeros(f.v.rows(), f.v.cols()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }
}

/// Adds `coef[i] · ∂tᵢ/∂(uᵢ, vᵢ)` for one observation.
fn accumulate(f: &FactorPair, obs: &Observation, coef: &[f64], g: &mut Gradient) {
    match &obs.measurement {
        Measurement::Entry { row, col } => {
            for (i, &c) in coef.iter().enumerate() {
                g.u[(*row, i)] += c * f.v[(*col, i)];
                g.v[(*col, i)] += c * f.u[(*row, i)];
            }
        }
        Measurement::Dense(a) => {
            let av = a.matmul(&f.v);
            let atu = a.transpose().matmul(&f.u);
            for (i, &c) in coef.iter().enumerate() {
                for r in 0..f.rows() {
                    g.u[(r, i)] += c * av[(r, i)];
                }
                for r in 0..f.cols() {
                    g.v[(r, i)] += c * atu[(r, i)];
                }
            }
        }
    }
}

fn penalty_gradient_over(f: &FactorPair, s: &SensingSample, idx: &[usize], d: &DropoutConfig) -> Gradient {
    let mut g = Gradient::zeros(f);
    let mut t = vec![0.0; f.width()];
    let mut coef = vec![0.0; f.width()];
    let w = 1.0 / idx.len().max(1) as f64;
    for &j in idx {
        let obs = &s.observations()[j];
        factor_terms(f, obs, &mut t);
        let resid = obs.y - t.iter().sum::<f64>();
        for (c, &ti) in coef.iter_mut().zip(&t) {
            *c = w * (-2.0 * resid + 2.0 * d.lambda() * ti);
        }
        accumulate(f, obs, &coef, &mut g);
    }
    g
}

/// Gradient of `L̂ + λR̂` over the whole sample.
pub fn penalty_gradient(f: &FactorPair, s: &SensingSample, d: &DropoutConfig) -> Result<Gradient, SensingError> {
    s.check_factors(f)?;
    let idx: Vec<usize> = (0..s.len()).collect();
    Ok(penalty_gradient_over(f, s, &idx, d))
}

pub(crate) fn penalty_gradient_batch(f: &FactorPair, s: &SensingSample, idx: &[usize], d: &DropoutConfig) -> Gradient {
    penalty_gradient_over(f, s, idx, d)
}

/// Stochastic gradient of the dropout loss on the observations `idx`, each with a fresh mask.
pub fn mask_gradient(
    f: &FactorPair,
    s: &SensingSample,
    idx: &[usize],
    d: &DropoutConfig,
    rng: &mut SeededRng,
) -> Gradient {
    let mut g = Gradient::zeros(f);
    let mut t = vec![0.0; f.width()];
    let mut mask = vec![0.0; f.width()];
    let mut coef = vec![0.0; f.width()];
    let w = 1.0 / idx.len().max(1) as f64;
    for &j in idx {
        let obs = &s.observations()[j];
        factor_terms(f, obs, &mut t);
        d.fill_mask(rng, &mut mask);
        let pred: f64 = t.iter().zip(&mask).map(|(a, b)| a * b).sum();
        let resid = obs.y - pred;
        for (c, &b) in coef.iter_mut().zip(&mask) {
            *c = -2.0 * w * resid * b;
        }
        accumulate(f, obs, &coef, &mut g);
    }
    g
}

/// Entrywise clip to `[−1, 1]`.
pub fn clip_unit(m: &Matrix) -> Matrix {
    m.map(|x| x.clamp(-1.0, 1.0))
}

/// `λ Σ_k diag(C)_k vec(M)_k²` with column-major `vec`.
pub fn vectorized_regularizer(m: &Matrix, second_moment: &Matrix, d: &DropoutConfig) -> Result<f64, SensingError> {
    let len = m.rows() * m.cols();
    if second_moment.shape() != (len, len) {
        return Err(SensingError::Shape(format!(
            "second moment must be {len}x{len} for a {}x{} matrix, got {}x{}",
            m.rows(),
            m.cols(),
            second_moment.rows(),
            second_moment.cols()
        )));
    }
    let mut total = 0.0;
    for c in 0..m.cols() {
        for r in 0..m.rows() {
            let k = c * m.rows() + r;
            total += second_moment[(k, k)] * m[(r, c)].powi(2);
        }
    }
    Ok(d.lambda() * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_pair() -> FactorPair {
        FactorPair::new(Matrix::identity(2), Matrix::identity(2)).unwrap()
    }

    #[test]
    fn exact_observation_has_zero_loss() {
        let f = FactorPair::new(
            Matrix::from_rows(&[&[1.0, 2.0], &[0.5, -1.0]]),
            Matrix::from_rows(&[&[0.3, 0.1], &[2.0, 0.0], &[-1.0, 1.0]]),
        )
        .unwrap();
        let m = f.product();
        let s = SensingSample::from_entries(
            2,
            3,
            (0..2).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| (r, c, m[(r, c)])),
        )
        .unwrap();
        assert!(erm_loss(&f, &s).unwrap() < 1e-28);
    }

    #[test]
    fn single_entry_loss_and_regularizer() {
        let f = FactorPair::new(Matrix::zeros(2, 1), Matrix::zeros(2, 1)).unwrap();
        let s = SensingSample::from_entries(2, 2, [(0, 0, 2.0)]).unwrap();
        assert_eq!(erm_loss(&f, &s).unwrap(), 4.0);

        let f = FactorPair::new(
            Matrix::from_rows(&[&[0.0], &[3.0]]),
            Matrix::from_rows(&[&[-2.0], &[5.0]]),
        )
        .unwrap();
        let s = SensingSample::from_entries(2, 2, [(1, 0, 0.0)]).unwrap();
        assert_eq!(explicit_regularizer(&f, &s).unwrap(), 9.0 * 4.0);
    }

    #[test]
    fn identity_factors_on_diagonal_entries() {
        let s = SensingSample::from_entries(2, 2, [(0, 0, 0.0), (1, 1, 0.0)]).unwrap();
        assert_eq!(explicit_regularizer(&identity_pair(), &s).unwrap(), 1.0);
    }

    #[test]
    fn zero_rate_mc_is_exact() {
        let s = SensingSample::from_entries(2, 2, [(0, 0, 0.3), (1, 0, -1.0), (0, 1, 2.0)]).unwrap();
        let f = FactorPair::new(
            Matrix::from_rows(&[&[1.0, 0.2], &[0.4, -0.7]]),
            Matrix::from_rows(&[&[0.5, 1.0], &[-1.0, 0.1]]),
        )
        .unwrap();
        let e = dropout_objective_mc(&f, &s, &DropoutConfig::none(), 3000, &SeededRng::from_seed(1)).unwrap();
        assert_eq!(e.stderr, 0.0);
        assert!((e.mean - erm_loss(&f, &s).unwrap()).abs() < 1e-15);
        assert!(dropout_objective_mc(&f, &s, &DropoutConfig::none(), 0, &SeededRng::from_seed(1)).is_err());
    }

    #[test]
    fn clip_examples() {
        let m = Matrix::from_rows(&[&[1.5, -0.2, -3.0]]);
        let g = clip_unit(&m);
        assert_eq!(g.row(0), &[1.0, -0.2, -1.0]);
        assert_eq!(clip_unit(&g), g);
    }

    #[test]
    fn vectorized_regularizer_identity_is_frobenius() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, -1.0]]);
        let d = DropoutConfig::new(0.5).unwrap();
        let v = vectorized_regularizer(&m, &Matrix::identity(4), &d).unwrap();
        assert_eq!(v, 15.0);
        assert_eq!(vectorized_regularizer(&m, &Matrix::identity(4), &DropoutConfig::none()).unwrap(), 0.0);
        assert!(vectorized_regularizer(&m, &Matrix::identity(3), &d).is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let s = SensingSample::from_entries(3, 2, [(0, 0, 1.0)]).unwrap();
        assert!(matches!(erm_loss(&identity_pair(), &s), Err(SensingError::Shape(_))));
        assert!(explicit_regularizer(&identity_pair(), &s).is_err());
    }
}
