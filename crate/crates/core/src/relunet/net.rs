use super::{LabeledSet, RelunetError, TwoLayerNet};
use crate::dropout::DropoutConfig;
use crate::numerics::{estimate_mean, Matrix, McEstimate, SeededRng};

#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

fn check_input(net: &TwoLayerNet, x: &[f64]) -> Result<(), RelunetError> {
    if x.len() != net.input_dim() {
        return Err(RelunetError::Shape(format!(
            "input has length {} but the network expects {}",
            x.len(),
            net.input_dim()
        )));
    }
    Ok(())
}

/// Hidden activations `σ(Vᵀx)`.
pub(crate) fn hidden(net: &TwoLayerNet, x: &[f64]) -> Vec<f64> {
    net.bottom.transpose_matvec(x).into_iter().map(relu).collect()
}

/// `U·σ(Vᵀx)`.
pub fn forward(net: &TwoLayerNet, x: &[f64]) -> Result<Vec<f64>, RelunetError> {
    check_input(net, x)?;
    Ok(net.top.matvec(&hidden(net, x)))
}

/// `g(x) = max(−1, min(1, f(x)))` for a single-output network.
pub fn clip_scalar_output(net: &TwoLayerNet, x: &[f64]) -> Result<f64, RelunetError> {
    if net.output_dim() != 1 {
        return Err(RelunetError::Shape(format!(
            "clipping needs a single output, network has {}",
            net.output_dim()
        )));
    }
    Ok(forward(net, x)?[0].clamp(-1.0, 1.0))
}

/// Activation matrix `σ(Vᵀ X)`, `d1×n`.
fn activations(net: &TwoLayerNet, inputs: &Matrix) -> Matrix {
    net.bottom.transpose().matmul(inputs).map(relu)
}

/// `âⱼ² = Êᵢ σ(vⱼᵀxᵢ)²` for every hidden unit.
pub fn activation_second_moments(net: &TwoLayerNet, data: &LabeledSet) -> Result<Vec<f64>, RelunetError> {
    data.check_net(net)?;
    Ok(second_moments_of(&activations(net, data.inputs())))
}

pub(crate) fn second_moments_of(act: &Matrix) -> Vec<f64> {
    let n = act.cols().max(1) as f64;
    (0..act.rows())
        .map(|j| act.row(j).iter().map(|a| a * a).sum::<f64>() / n)
        .collect()
}

/// `Êᵢ ‖yᵢ − f(xᵢ)‖²`.
pub fn empirical_loss(net: &TwoLayerNet, data: &LabeledSet) -> Result<f64, RelunetError> {
    data.check_net(net)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let pred = net.top.matmul(&activations(net, data.inputs()));
    let sq: f64 = pred
        .as_slice()
        .iter()
        .zip(data.targets().as_slice())
        .map(|(p, y)| (y - p).powi(2))
        .sum();
    Ok(sq / data.len() as f64)
}

/// `R̂(w) = λ·Σⱼ ‖uⱼ‖²·âⱼ²`.
pub fn explicit_regularizer_relu(net: &TwoLayerNet, data: &LabeledSet, d: &DropoutConfig) -> Result<f64, RelunetError> {
    let a2 = activation_second_moments(net, data)?;
    Ok(d.lambda() * net.outgoing_norms_sq().iter().zip(&a2).map(|(u, a)| u * a).sum::<f64>())
}

/// `L̂(w) + R̂(w)`.
pub fn penalty_objective_relu(net: &TwoLayerNet, data: &LabeledSet, d: &DropoutConfig) -> Result<f64, RelunetError> {
    Ok(empirical_loss(net, data)? + explicit_regularizer_relu(net, data, d)?)
}

/// Monte-Carlo estimate of `Êᵢ E_B ‖yᵢ − U·B·σ(Vᵀxᵢ)‖²`, with one mask per example per trial.
pub fn dropout_objective_mc_relu(
    net: &TwoLayerNet,
    data: &LabeledSet,
    d: &DropoutConfig,
    trials: usize,
    rng: &SeededRng,
) -> Result<McEstimate, RelunetError> {
    if trials == 0 {
        return Err(RelunetError::InvalidArgument("trials must be at least 1".into()));
    }
    data.check_net(net)?;
    let act = activations(net, data.inputs());
    let (d1, d2, n) = (net.width(), net.output_dim(), data.len());
    // Per example, the d2×d1 block uⱼ·aⱼ(xᵢ) stored column by column.
    let mut contrib = Vec::with_capacity(n * d1 * d2);
    for i in 0..n {
        for j in 0..d1 {
            let a = act[(j, i)];
            contrib.extend((0..d2).map(|k| net.top[(k, j)] * a));
        }
    }
    let targets: Vec<Vec<f64>> = (0..n).map(|i| data.target(i)).collect();
    let nf = n.max(1) as f64;
    Ok(estimate_mean(rng, trials, |r| {
        let mut pred = vec![0.0; d2];
        let mut total = 0.0;
        for (y, block) in targets.iter().zip(contrib.chunks_exact(d1 * d2)) {
            pred.iter_mut().for_each(|p| *p = 0.0);
            for col in block.chunks_exact(d2) {
                let b = d.sample_gate(r);
                if b != 0.0 {
                    for (p, c) in pred.iter_mut().zip(col) {
                        *p += b * c;
                    }
                }
            }
            total += y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        total / nf
    }))
}

/// `Σⱼ ‖uⱼ‖²‖vⱼ‖²`, the squared ℓ₂ path-norm.
pub fn path_norm_sq(net: &TwoLayerNet) -> f64 {
    (0..net.width())
        .map(|j| net.top.column_norm_sq(j) * net.bottom.column_norm_sq(j))
        .sum()
}

/// Monte-Carlo side and closed-form side of `R(w) = (λ/2)·path_norm²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyCheck {
    pub lhs: McEstimate,
    pub rhs: f64,
}

impl IsotropyCheck {
    pub fn passes(&self, k: f64) -> bool {
        self.lhs.covers(self.rhs, k)
    }
}

/// Estimates `λ·Σⱼ ‖uⱼ‖²·E σ(vⱼᵀx)²` with `x` drawn by `sampler`, which must be symmetric and
/// isotropic for the identity to hold. `standard_gaussian` is the usual choice.
pub fn isotropy_regularizer_check<S>(
    net: &TwoLayerNet,
    sampler: S,
    mc_n: usize,
    d: &DropoutConfig,
    rng: &SeededRng,
) -> Result<IsotropyCheck, RelunetError>
where
    S: Fn(&mut SeededRng, &mut [f64]) + Sync,
{
    if mc_n == 0 {
        return Err(RelunetError::InvalidArgument("need at least one sample".into()));
    }
    let lambda = d.lambda();
    let u2 = net.outgoing_norms_sq();
    let d0 = net.input_dim();
    let lhs = estimate_mean(rng, mc_n, |r| {
        let mut x = vec![0.0; d0];
        sampler(r, &mut x);
        let h = hidden(net, &x);
        lambda * u2.iter().zip(&h).map(|(u, a)| u * a * a).sum::<f64>()
    });
    Ok(IsotropyCheck {
        lhs,
        rhs: 0.5 * lambda * path_norm_sq(net),
    })
}

/// Fills `x` with independent standard normals.
pub fn standard_gaussian(r: &mut SeededRng, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = r.gaussian();
    }
}

/// Gradient with respect to both layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradient {
    pub top: Matrix,
    pub bottom: Matrix,
}

impl NetGradient {
    fn zeros(net: &TwoLayerNet) -> Self {
        Self {
            top: Matrix::zeros(net.top.rows(), net.top.cols()),
            bottom: Matrix::zeros(net.bottom.rows(), net.bottom.cols()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.top.max_abs().max(self.bottom.max_abs())
    }
}

/// Gradient of `L̂ + R̂` in closed form; `σ'(0)` is taken as 0.
pub fn penalty_gradient_relu(net: &TwoLayerNet, data: &LabeledSet, d: &DropoutConfig) -> Result<NetGradient, RelunetError> {
    data.check_net(net)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    Ok(penalty_gradient_batch(net, data, &idx, d))
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn penalty_gradient_batch(net: &TwoLayerNet, data: &LabeledSet, idx: &[usize], d: &DropoutConfig) -> NetGradient {
    let mut g = NetGradient::zeros(net);
    let (d1, d2) = (net.width(), net.output_dim());
    let w = 1.0 / idx.len().max(1) as f64;
    let lambda = d.lambda();
    let u2 = net.outgoing_norms_sq();
    let mut a2 = vec![0.0; d1];
    for &i in idx {
        let x = data.input(i);
        let z = net.bottom.transpose_matvec(&x);
        let a: Vec<f64> = z.iter().map(|&v| relu(v)).collect();
        let pred = net.top.matvec(&a);
        let resid: Vec<f64> = (0..d2).map(|k| data.targets()[(k, i)] - pred[k]).collect();
        for j in 0..d1 {
            a2[j] += w * a[j] * a[j];
            for k in 0..d2 {
                g.top[(k, j)] -= 2.0 * w * resid[k] * a[j];
            }
            if z[j] > 0.0 {
                let back: f64 = (0..d2).map(|k| resid[k] * net.top[(k, j)]).sum();
                let dz = w * (-2.0 * back + 2.0 * lambda * u2[j] * a[j]);
                for (r, xr) in x.iter().enumerate() {
                    g.bottom[(r, j)] += dz * xr;
                }
            }
        }
    }
    for j in 0..d1 {
        for k in 0..d2 {
            g.top[(k, j)] += 2.0 * lambda * net.top[(k, j)] * a2[j];
        }
    }
    g
}

/// Stochastic gradient of the dropout loss on `idx`, each example with a fresh hidden mask.
#[allow(clippy::needless_range_loop)]
pub(crate) fn mask_gradient_batch(
    net: &TwoLayerNet,
    data: &LabeledSet,
    idx: &[usize],
    d: &DropoutConfig,
    rng: &mut SeededRng,
) -> NetGradient {
    let mut g = NetGradient::zeros(net);
    let (d1, d2) = (net.width(), net.output_dim());
    let w = 1.0 / idx.len().max(1) as f64;
    let mut mask = vec![0.0; d1];
    for &i in idx {
        let x = data.input(i);
        let z = net.bottom.transpose_matvec(&x);
        d.fill_mask(rng, &mut mask);
        let h: Vec<f64> = z.iter().zip(&mask).map(|(&v, b)| b * relu(v)).collect();
        let pred = net.top.matvec(&h);
        let resid: Vec<f64> = (0..d2).map(|k| data.targets()[(k, i)] - pred[k]).collect();
        for j in 0..d1 {
            if h[j] == 0.0 {
                continue;
            }
            for k in 0..d2 {
                g.top[(k, j)] -= 2.0 * w * resid[k] * h[j];
            }
            let back: f64 = (0..d2).map(|k| resid[k] * net.top[(k, j)]).sum();
            let dz = -2.0 * w * back * mask[j];
            for (r, xr) in x.iter().enumerate() {
                g.bottom[(r, j)] += dz * xr;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_set(x: &[f64], y: f64) -> LabeledSet {
        LabeledSet::new(Matrix::from_columns(&[x.to_vec()]), Matrix::from_rows(&[&[y]])).unwrap()
    }

    #[test]
    fn identity_net_forward() {
        let net = TwoLayerNet::new(Matrix::identity(2), Matrix::identity(2)).unwrap();
        assert_eq!(forward(&net, &[1.0, -2.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(forward(&net, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(forward(&net, &[1.0]).is_err());
    }

    #[test]
    fn regularizer_arithmetic() {
        // u = 2, â₁ = 0.5 with a single input 0.5 and v = 1.
        let net = TwoLayerNet::new(Matrix::from_rows(&[&[2.0]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        let data = unit_set(&[0.5], 0.0);
        let d = DropoutConfig::new(0.5).unwrap();
        assert!((explicit_regularizer_relu(&net, &data, &d).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(explicit_regularizer_relu(&net, &data, &DropoutConfig::none()).unwrap(), 0.0);
    }

    #[test]
    fn zero_rate_mc_is_exact() {
        let net = TwoLayerNet::new(Matrix::from_rows(&[&[1.0, -0.5]]), Matrix::from_rows(&[&[1.0, 2.0]])).unwrap();
        let data = unit_set(&[0.3], 0.2);
        let est = dropout_objective_mc_relu(&net, &data, &DropoutConfig::none(), 50, &SeededRng::from_seed(0)).unwrap();
        assert!((est.mean - empirical_loss(&net, &data).unwrap()).abs() < 1e-15);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn path_norm_arithmetic() {
        let net = TwoLayerNet::new(Matrix::from_rows(&[&[1.0, 2.0]]), Matrix::identity(2)).unwrap();
        assert_eq!(path_norm_sq(&net), 5.0);
        assert_eq!(path_norm_sq(&TwoLayerNet::zeros(3, 2, 1)), 0.0);
    }

    #[test]
    fn clipping() {
        let net = TwoLayerNet::new(Matrix::from_rows(&[&[1.5]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        assert_eq!(clip_scalar_output(&net, &[1.0]).unwrap(), 1.0);
        let net = TwoLayerNet::new(Matrix::from_rows(&[&[-0.3]]), Matrix::from_rows(&[&[1.0]])).unwrap();
        assert_eq!(clip_scalar_output(&net, &[1.0]).unwrap(), -0.3);
    }

    #[test]
    fn zero_net_isotropy() {
        let c = isotropy_regularizer_check(
            &TwoLayerNet::zeros(2, 3, 1),
            standard_gaussian,
            100,
            &DropoutConfig::new(0.5).unwrap(),
            &SeededRng::from_seed(1),
        )
        .unwrap();
        assert_eq!((c.lhs.mean, c.rhs), (0.0, 0.0));
    }

    #[test]
    fn sampled_mask_gradient_is_unbiased() {
        let mut rng = SeededRng::from_seed(17);
        let mut g = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.gaussian());
        let net = TwoLayerNet::new(g(2, 4), g(3, 4)).unwrap();
        let data = LabeledSet::new(g(3, 5), Matrix::from_rows(&[&[0.5, -0.2, 0.1, 0.9, -0.7], &[0.0, 0.3, -0.4, 0.2, 0.6]])).unwrap();
        let d = DropoutConfig::new(0.4).unwrap();
        let idx: Vec<usize> = (0..data.len()).collect();
        let exact = penalty_gradient_relu(&net, &data, &d).unwrap();
        let flat = |g: &NetGradient| g.top.as_slice().iter().chain(g.bottom.as_slice()).copied().collect::<Vec<_>>();
        let trials = 100_000;
        let mut rng = SeededRng::from_seed(18);
        let k = flat(&exact).len();
        let (mut sum, mut sq) = (vec![0.0; k], vec![0.0; k]);
        for _ in 0..trials {
            for (c, x) in flat(&mask_gradient_batch(&net, &data, &idx, &d, &mut rng)).into_iter().enumerate() {
                sum[c] += x;
                sq[c] += x * x;
            }
        }
        let t = trials as f64;
        for (c, e) in flat(&exact).into_iter().enumerate() {
            let mean = sum[c] / t;
            let se = ((sq[c] / t - mean * mean).max(0.0) / t).sqrt();
            assert!((mean - e).abs() <= 3.0 * se + 1e-12, "coordinate {c}: {mean} vs {e} (se {se})");
        }
    }
}
