//! Plug-in capacity measures of a single-output network on a sample.

use super::net::{activation_second_moments, explicit_regularizer_relu, path_norm_sq, relu, second_moments_of};
use super::{LabeledSet, RelunetError, TwoLayerNet};
use crate::dropout::DropoutConfig;
use crate::numerics::{mahalanobis_data_norm, norm, psd_spectrum, pseudo_inverse, Matrix, SeededRng};

/// Random directions used for `β̂` on top of the network's own hidden weights.
pub const DEFAULT_BETA_DIRECTIONS: usize = 512;

/// Eigenvalues below this fraction of the largest count as zero in `rank(C)` and `C†`.
const RANK_CUTOFF: f64 = 1e-10;

/// Directions whose projected second moment falls below this are skipped by `β̂`.
const MIN_PROJECTED_MOMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    /// `Σⱼ |uⱼ|·âⱼ`.
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub phi: f64,
    /// `R̂(w) = λ·Σⱼ uⱼ²âⱼ²`.
    pub reg_value: f64,
    pub path_norm_sq: f64,
    pub x_mahalanobis: f64,
    pub rank_c: usize,
}

/// Second-moment geometry of the inputs: `‖X‖_{C†}` and `rank(C)` for `C = Ê xxᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataGeometry {
    pub x_mahalanobis: f64,
    pub rank_c: usize,
}

impl DataGeometry {
    pub fn of(inputs: &Matrix) -> Result<Self, RelunetError> {
        if inputs.cols() == 0 {
            return Ok(Self {
                x_mahalanobis: 0.0,
                rank_c: 0,
            });
        }
        let c = inputs.second_moment();
        let spectrum = psd_spectrum(&c)?;
        let top = spectrum.first().copied().unwrap_or(0.0);
        let rank_c = spectrum.iter().filter(|&&s| top > 0.0 && s > RANK_CUTOFF * top).count();
        let p = pseudo_inverse(&c, RANK_CUTOFF)?;
        let p = p.add(&p.transpose()).scale(0.5);
        Ok(Self {
            x_mahalanobis: mahalanobis_data_norm(inputs, &p)?,
            rank_c,
        })
    }
}

/// `ψⱼ = ‖uⱼ‖·âⱼ`.
pub fn flows(net: &TwoLayerNet, data: &LabeledSet) -> Result<Vec<f64>, RelunetError> {
    let a2 = activation_second_moments(net, data)?;
    Ok(net
        .outgoing_norms_sq()
        .iter()
        .zip(&a2)
        .map(|(u, a)| (u * a).sqrt())
        .collect())
}

/// `φ = ‖ψ‖₁ / (√d1·‖ψ‖₂)`, with `φ = 1` for `ψ = 0`.
pub fn co_adaptation(psi: &[f64]) -> f64 {
    let l2 = norm(psi);
    if l2 == 0.0 {
        return 1.0;
    }
    let l1: f64 = psi.iter().map(|p| p.abs()).sum();
    (l1 / ((psi.len() as f64).sqrt() * l2)).min(1.0)
}

/// `min_v Ê σ(vᵀx)² / Ê (vᵀx)²` over the columns of `directions`.
///
/// Returns 1 when every direction is skipped.
pub fn beta_hat(inputs: &Matrix, directions: &Matrix) -> f64 {
    let proj = directions.transpose().matmul(inputs);
    let n = inputs.cols().max(1) as f64;
    let mut best = 1.0f64;
    for k in 0..proj.rows() {
        let (mut pos, mut all) = (0.0, 0.0);
        for &z in proj.row(k) {
            all += z * z;
            pos += relu(z) * relu(z);
        }
        if all / n < MIN_PROJECTED_MOMENT {
            continue;
        }
        best = best.min(pos / all);
    }
    best
}

/// `count` directions drawn uniformly from the unit sphere in `ℝ^d`, one per column.
pub fn random_directions(d: usize, count: usize, rng: &mut SeededRng) -> Matrix {
    let mut m = Matrix::from_fn(d, count, |_, _| rng.gaussian());
    for k in 0..count {
        let col = m.column(k);
        let len = norm(&col);
        if len > 0.0 {
            m.set_column(k, &col.iter().map(|x| x / len).collect::<Vec<_>>());
        }
    }
    m
}

fn require_single_output(net: &TwoLayerNet) -> Result<(), RelunetError> {
    if net.output_dim() != 1 {
        return Err(RelunetError::Shape(format!(
            "capacity measures need a single output, network has {}",
            net.output_dim()
        )));
    }
    Ok(())
}

/// Capacity report with `beta_dirs` fresh random directions.
pub fn capacity_report(
    net: &TwoLayerNet,
    data: &LabeledSet,
    d: &DropoutConfig,
    beta_dirs: usize,
    rng: &mut SeededRng,
) -> Result<CapacityReport, RelunetError> {
    let dirs = random_directions(data.input_dim(), beta_dirs, rng);
    capacity_report_with(net, data, d, &DataGeometry::of(data.inputs())?, &dirs)
}

/// Capacity report from precomputed data geometry and random directions; the network's hidden
/// weight vectors are always added to the direction set.
pub fn capacity_report_with(
    net: &TwoLayerNet,
    data: &LabeledSet,
    d: &DropoutConfig,
    geometry: &DataGeometry,
    directions: &Matrix,
) -> Result<CapacityReport, RelunetError> {
    require_single_output(net)?;
    data.check_net(net)?;
    data.require_examples(2)?;
    if directions.rows() != data.input_dim() {
        return Err(RelunetError::Shape(format!(
            "directions live in dimension {} but inputs in {}",
            directions.rows(),
            data.input_dim()
        )));
    }
    let psi = flows(net, data)?;
    let beta = beta_hat(data.inputs(), directions).min(beta_hat(data.inputs(), &net.bottom));
    Ok(CapacityReport {
        alpha_hat: psi.iter().sum(),
        beta_hat: beta,
        phi: co_adaptation(&psi),
        reg_value: explicit_regularizer_relu(net, data, d)?,
        path_norm_sq: path_norm_sq(net),
        x_mahalanobis: geometry.x_mahalanobis,
        rank_c: geometry.rank_c,
    })
}

/// `S' = {(ζᵢxᵢ, yᵢ)}` with independent Rademacher signs `ζᵢ`.
pub fn symmetrize(data: &LabeledSet, rng: &mut SeededRng) -> LabeledSet {
    let mut inputs = data.inputs().clone();
    for i in 0..inputs.cols() {
        let z = rng.rademacher();
        if z < 0.0 {
            let flipped: Vec<f64> = inputs.column(i).iter().map(|x| -x).collect();
            inputs.set_column(i, &flipped);
        }
    }
    LabeledSet::new(inputs, data.targets().clone()).expect("sign flips keep the set valid")
}

/// `α' = Σⱼ |uⱼ|·sqrt(E_{x,ζ} σ(ζ vⱼᵀx)²)`, the inner expectation averaged over `resamples`
/// independent sign draws on the sample.
pub fn alpha_symmetrized(
    net: &TwoLayerNet,
    data: &LabeledSet,
    resamples: usize,
    rng: &mut SeededRng,
) -> Result<f64, RelunetError> {
    require_single_output(net)?;
    data.check_net(net)?;
    if resamples == 0 {
        return Err(RelunetError::InvalidArgument("need at least one sign resampling".into()));
    }
    let z = net.bottom.transpose().matmul(data.inputs());
    let mut acc = vec![0.0; net.width()];
    for _ in 0..resamples {
        let signs: Vec<f64> = (0..data.len()).map(|_| rng.rademacher()).collect();
        let act = Matrix::from_fn(z.rows(), z.cols(), |j, i| relu(signs[i] * z[(j, i)]));
        for (a, m) in acc.iter_mut().zip(second_moments_of(&act)) {
            *a += m / resamples as f64;
        }
    }
    Ok(net
        .outgoing_norms_sq()
        .iter()
        .zip(&acc)
        .map(|(u, a)| (u * a).sqrt())
        .sum())
}
