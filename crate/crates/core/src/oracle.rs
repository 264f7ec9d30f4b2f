//! Reference computations that share no code path with the closed forms they check.
//!
//! Used by the audit command and the test suite.

use crate::dropout::DropoutConfig;
use crate::numerics::{dot, norm, pseudo_inverse, svd, Matrix, NumericsError, SeededRng};
use crate::relunet::{LabeledSet, RelunetError, TwoLayerNet};
use crate::sensing::{expected_regularizer, factor_terms, FactorPair, MeasurementModel, SensingError, SensingSample};

/// Widest hidden layer accepted by the exact mask enumerations.
pub const MAX_ENUMERATION_WIDTH: usize = 16;

fn mask_weights(d1: usize, d: &DropoutConfig) -> Vec<(Vec<f64>, f64)> {
    let p = d.rate();
    (0u32..(1 << d1))
        .filter_map(|bits| {
            let mut prob = 1.0;
            let gates: Vec<f64> = (0..d1)
                .map(|j| {
                    if bits >> j & 1 == 1 {
                        prob *= 1.0 - p;
                        d.keep_scale()
                    } else {
                        prob *= p;
                        0.0
                    }
                })
                .collect();
            (prob > 0.0).then_some((gates, prob))
        })
        .collect()
}

fn check_width(d1: usize) -> Result<(), String> {
    if d1 > MAX_ENUMERATION_WIDTH {
        return Err(format!("exact enumeration supports widths up to {MAX_ENUMERATION_WIDTH}, got {d1}"));
    }
    Ok(())
}

/// `Ê_j E_B (y_j − ⟨UBVᵀ, A⁽ʲ⁾⟩)²` by summing over all `2^d1` masks.
pub fn exact_dropout_objective(f: &FactorPair, s: &SensingSample, d: &DropoutConfig) -> Result<f64, SensingError> {
    check_width(f.width()).map_err(SensingError::InvalidArgument)?;
    if s.is_empty() {
        return Ok(0.0);
    }
    let masks = mask_weights(f.width(), d);
    let mut t = vec![0.0; f.width()];
    let mut total = 0.0;
    for obs in s.observations() {
        factor_terms(f, obs, &mut t);
        for (gates, prob) in &masks {
            let pred: f64 = t.iter().zip(gates).map(|(a, b)| a * b).sum();
            total += prob * (obs.y - pred).powi(2);
        }
    }
    Ok(total / s.len() as f64)
}

/// `Êᵢ E_B ‖yᵢ − U·B·σ(Vᵀxᵢ)‖²` by summing over all `2^d1` masks.
pub fn exact_dropout_objective_relu(net: &TwoLayerNet, data: &LabeledSet, d: &DropoutConfig) -> Result<f64, RelunetError> {
    check_width(net.width()).map_err(RelunetError::InvalidArgument)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let masks = mask_weights(net.width(), d);
    let mut total = 0.0;
    for i in 0..data.len() {
        let x = data.input(i);
        let y = data.target(i);
        let h: Vec<f64> = net.bottom.transpose_matvec(&x).into_iter().map(|z| z.max(0.0)).collect();
        for (gates, prob) in &masks {
            let hb: Vec<f64> = h.iter().zip(gates).map(|(a, b)| a * b).collect();
            let pred = net.top.matvec(&hb);
            total += prob * y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    Ok(total / data.len() as f64)
}

/// Naive `Σᵢ U(k,·)·σ(Vᵀx)` by explicit loops.
pub fn forward_naive(net: &TwoLayerNet, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.output_dim()];
    for j in 0..net.width() {
        let mut z = 0.0;
        for (r, xr) in x.iter().enumerate() {
            z += net.bottom[(r, j)] * xr;
        }
        let a = if z > 0.0 { z } else { 0.0 };
        for (k, o) in out.iter_mut().enumerate() {
            *o += net.top[(k, j)] * a;
        }
    }
    out
}

/// `Σ_{i0,i1,i2} U(i2,i1)²·V(i0,i1)²` by a triple loop.
pub fn path_norm_naive(net: &TwoLayerNet) -> f64 {
    let mut total = 0.0;
    for i0 in 0..net.input_dim() {
        for i1 in 0..net.width() {
            for i2 in 0..net.output_dim() {
                total += (net.top[(i2, i1)] * net.bottom[(i0, i1)]).powi(2);
            }
        }
    }
    total
}

/// Outcome of [`minimize_expected_regularizer`].
#[derive(Debug, Clone)]
pub struct Minimization {
    pub factors: FactorPair,
    pub value: f64,
    /// Largest entry of `UVᵀ − M` at the end; stays at round-off level.
    pub feasibility_error: f64,
    pub iterations: usize,
}

fn weighted(f: &FactorPair, model: &MeasurementModel) -> (Matrix, Matrix) {
    match model {
        MeasurementModel::Gaussian { .. } => (f.u.clone(), f.v.clone()),
        MeasurementModel::Indicator { row_probs, col_probs } => {
            let sp: Vec<f64> = row_probs.iter().map(|x| x.sqrt()).collect();
            let sq: Vec<f64> = col_probs.iter().map(|x| x.sqrt()).collect();
            (f.u.scale_rows(&sp), f.v.scale_rows(&sq))
        }
    }
}

const LBFGS_MEMORY: usize = 10;

/// L-BFGS two-loop recursion: `−H·g` for the inverse-Hessian estimate built from `history`.
fn two_loop(g: &[f64], history: &[(Vec<f64>, Vec<f64>)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let a = dot(s, &q) / dot(y, s);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y), a) in history.iter().zip(alphas.iter().rev()) {
        let b = dot(y, &q) / dot(y, s);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter().map(|x| -x).collect()
}

/// Gradient of `R(U(I+E), V(I+E)⁻ᵀ)` at `E = 0`.
fn orbit_gradient(f: &FactorPair, model: &MeasurementModel) -> Matrix {
    let (uw, vw) = weighted(f, model);
    let g = uw.transpose().matmul(&uw);
    let h = vw.transpose().matmul(&vw);
    let d1 = f.width();
    Matrix::from_fn(d1, d1, |l, k| 2.0 * g[(l, k)] * h[(k, k)] - 2.0 * g[(l, l)] * h[(k, l)])
}

fn orbit_step(f: &FactorPair, e: &Matrix) -> Result<FactorPair, NumericsError> {
    let t = Matrix::identity(e.rows()).add(e);
    let t_inv = pseudo_inverse(&t, 0.0)?;
    Ok(FactorPair {
        u: f.u.matmul(&t),
        v: f.v.matmul_transpose(&t_inv),
    })
}

/// Removes the drift `UVᵀ − M` that repeated inversions accumulate; the drift lies in the range
/// of `U`, so `V ← V + (U†(M − UVᵀ))ᵀ` cancels it.
fn restore_feasibility(f: &mut FactorPair, m: &Matrix) -> Result<bool, NumericsError> {
    let resid = m.sub(&f.product());
    if resid.max_abs() <= 1e-14 * m.max_abs().max(1e-300) {
        return Ok(false);
    }
    let fix = pseudo_inverse(&f.u, 1e-13)?.matmul(&resid);
    f.v = f.v.add(&fix.transpose());
    Ok(true)
}

/// Minimizes the expected regularizer over width-`d1` factorizations of `m` by quasi-Newton
/// descent along `(U, V) ↦ (U(I+E), V(I+E)⁻ᵀ)`, which never leaves `{UVᵀ = M}`.
///
/// Starts from `[AΣ^{1/2} | 0]·H`, `[BΣ^{1/2} | 0]·H⁻ᵀ` with `M = AΣBᵀ` unweighted and `H` a random
/// Gaussian matrix.
pub fn minimize_expected_regularizer(
    m: &Matrix,
    model: &MeasurementModel,
    d1: usize,
    max_iters: usize,
    rng: &mut SeededRng,
) -> Result<Minimization, SensingError> {
    let dec = svd(m)?;
    if dec.singular_values.iter().filter(|&&s| s > 1e-12 * dec.singular_values[0].max(1e-300)).count() > d1 {
        return Err(SensingError::InvalidArgument(format!("width {d1} is below the rank of M")));
    }
    let root: Vec<f64> = (0..d1).map(|i| dec.singular_values.get(i).map_or(0.0, |s| s.sqrt())).collect();
    let h = Matrix::from_fn(d1, d1, |_, _| rng.gaussian());
    let h_inv = pseudo_inverse(&h, 0.0)?;
    let mut f = FactorPair {
        u: dec.left.resize_cols(d1).scale_cols(&root).matmul(&h),
        v: dec.right.resize_cols(d1).scale_cols(&root).matmul_transpose(&h_inv),
    };
    let mut value = expected_regularizer(&f, model)?;
    let mut iterations = 0;
    // L-BFGS in the relative coordinates E; every step re-bases at E = 0.
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut g = orbit_gradient(&f, model).into_vec();
    for it in 0..max_iters {
        iterations = it + 1;
        let gnorm = norm(&g);
        if gnorm <= 1e-15 * value.max(1e-300) {
            break;
        }
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|x| -x).collect();
            slope = -gnorm * gnorm;
        }
        let dnorm = norm(&dir);
        // Keep ‖E‖ below ½ so that I + E stays well conditioned.
        let mut step = if history.is_empty() { (1e-2 / value.max(1e-12)).min(0.5 / dnorm) } else { 1.0f64.min(0.5 / dnorm) };
        let mut accepted = None;
        for _ in 0..60 {
            let e = Matrix::from_vec(d1, d1, dir.iter().map(|x| step * x).collect())?;
            let cand = orbit_step(&f, &e)?;
            let v = expected_regularizer(&cand, model)?;
            if v <= value + 1e-4 * step * slope && v < value {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((mut cand, mut v)) = accepted else { break };
        if restore_feasibility(&mut cand, m)? {
            v = expected_regularizer(&cand, model)?;
        }
        let g_new = orbit_gradient(&cand, model).into_vec();
        let s_vec: Vec<f64> = dir.iter().map(|x| step * x).collect();
        let y_vec: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s_vec, &y_vec) > 1e-12 * norm(&s_vec) * norm(&y_vec) {
            history.push((s_vec, y_vec));
            if history.len() > LBFGS_MEMORY {
                history.remove(0);
            }
        }
        f = cand;
        value = v;
        g = g_new;
    }
    let feasibility_error = f.product().sub(m).max_abs();
    Ok(Minimization {
        factors: f,
        value,
        feasibility_error,
        iterations,
    })
}

/// Central finite-difference derivative of `objective` along every entry of `x`.
pub fn central_differences(x: &Matrix, step: f64, mut objective: impl FnMut(&Matrix) -> f64) -> Matrix {
    let mut probe = x.clone();
    Matrix::from_fn(x.rows(), x.cols(), |r, c| {
        let orig = probe[(r, c)];
        probe[(r, c)] = orig + step;
        let up = objective(&probe);
        probe[(r, c)] = orig - step;
        let down = objective(&probe);
        probe[(r, c)] = orig;
        (up - down) / (2.0 * step)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{induced_regularizer, penalty_objective};

    #[test]
    fn enumeration_matches_closed_form_on_a_tiny_case() {
        let f = FactorPair::new(Matrix::from_rows(&[&[1.0, 2.0], &[0.5, -1.0]]), Matrix::from_rows(&[&[1.0, 1.0], &[-2.0, 0.3]])).unwrap();
        let s = SensingSample::from_entries(2, 2, [(0, 0, 0.4), (1, 1, -0.2), (0, 1, 1.0)]).unwrap();
        let d = DropoutConfig::new(0.3).unwrap();
        let exact = exact_dropout_objective(&f, &s, &d).unwrap();
        assert!((exact - penalty_objective(&f, &s, &d).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn orbit_descent_stays_feasible_and_approaches_theta() {
        let m = Matrix::from_rows(&[&[1.0, 0.5, 0.0], &[0.0, 1.0, -0.5]]);
        let model = MeasurementModel::Gaussian { rows: 2, cols: 3 };
        let out = minimize_expected_regularizer(&m, &model, 3, 3000, &mut SeededRng::from_seed(3)).unwrap();
        let theta = induced_regularizer(&m, &model, 3).unwrap();
        assert!(out.feasibility_error < 1e-9, "{}", out.feasibility_error);
        assert!(out.value >= theta - 1e-9);
        assert!(out.value - theta < 1e-3 * theta, "{} vs {theta}", out.value);
    }
}
