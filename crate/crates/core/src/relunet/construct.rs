use super::net::relu;
use super::{RelunetError, TwoLayerNet};
use crate::numerics::{dot, Matrix, SeededRng};

/// A finite distribution on the unit circle together with a weight vector `w` whose activation
/// second moment `E σ(wᵀx)²` is 1 although `‖w‖ = 1/√δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterExample {
    pub atoms: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub w: [f64; 2],
}

impl CounterExample {
    /// Exact `E f(x)` by summation over the atoms.
    pub fn expectation(&self, f: impl Fn(&[f64; 2]) -> f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, p)| p * f(a)).sum()
    }

    /// `E σ(wᵀx)²`, summed exactly.
    pub fn activation_second_moment(&self) -> f64 {
        self.expectation(|x| relu(dot(&self.w, x)).powi(2))
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.expectation(|x| x[0]), self.expectation(|x| x[1])]
    }

    pub fn sample(&self, rng: &mut SeededRng) -> [f64; 2] {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (a, p) in self.atoms.iter().zip(&self.weights) {
            acc += p;
            if u < acc {
                return *a;
            }
        }
        *self.atoms.last().expect("three atoms")
    }
}

/// Atoms `[1; 0]` with weight `δ` and `[−δ/(1−δ); ±√(1−2δ)/(1−δ)]` with weight `(1−δ)/2` each;
/// `w = (1/√δ, 0)`.
pub fn counterexample_distribution(delta: f64) -> Result<CounterExample, RelunetError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(RelunetError::InvalidArgument(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let a = -delta / (1.0 - delta);
    let b = (1.0 - 2.0 * delta).sqrt() / (1.0 - delta);
    let side = 0.5 * (1.0 - delta);
    Ok(CounterExample {
        atoms: vec![[1.0, 0.0], [a, b], [a, -b]],
        weights: vec![delta, side, side],
        w: [1.0 / delta.sqrt(), 0.0],
    })
}

/// Width-`d1` network computing `x ↦ wᵀx` exactly: `u = (2/d1)[1, −1, …]`, `V = w(e₁ − e₂ + …)ᵀ`.
pub fn lower_bound_embedding(w: &[f64], d1: usize) -> Result<TwoLayerNet, RelunetError> {
    if d1 == 0 || !d1.is_multiple_of(2) {
        return Err(RelunetError::InvalidArgument(format!("width must be even and positive, got {d1}")));
    }
    let sign = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let top = Matrix::from_fn(1, d1, |_, j| 2.0 / d1 as f64 * sign(j));
    let bottom = Matrix::from_fn(w.len(), d1, |r, j| w[r] * sign(j));
    TwoLayerNet::new(top, bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relunet::forward;

    #[test]
    fn quarter_delta() {
        let c = counterexample_distribution(0.25).unwrap();
        assert_eq!(c.w, [2.0, 0.0]);
        assert!((c.activation_second_moment() - 1.0).abs() < 1e-15);
        let m = c.mean();
        assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15);
        for a in &c.atoms {
            assert!((a[0] * a[0] + a[1] * a[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_delta() {
        assert!(counterexample_distribution(0.0).is_err());
        assert!(counterexample_distribution(0.5).is_err());
    }

    #[test]
    fn embedding_is_linear() {
        let net = lower_bound_embedding(&[1.0, 0.0], 2).unwrap();
        assert_eq!(forward(&net, &[3.0, -1.0]).unwrap(), vec![3.0]);
        assert_eq!(forward(&net, &[-3.0, 1.0]).unwrap(), vec![-3.0]);
        assert!(lower_bound_embedding(&[1.0], 3).is_err());
    }
}
