//! Cross-checks against independent references: nalgebra decompositions, naive loops, mask
//! enumeration and numerical minimization.

use dropcap::dropout::DropoutConfig;
use dropcap::numerics::{mahalanobis_data_norm, nuclear_norm, pseudo_inverse, psd_spectrum, spectral_norm, svd, Matrix, SeededRng};
use dropcap::oracle::{
    exact_dropout_objective, exact_dropout_objective_relu, forward_naive, minimize_expected_regularizer, path_norm_naive,
};
use dropcap::relunet::{
    activation_second_moments, empirical_loss, explicit_regularizer_relu, forward, isotropy_regularizer_check,
    path_norm_sq, penalty_objective_relu, standard_gaussian, LabeledSet, TwoLayerNet,
};
use dropcap::sensing::{
    equalized_minimizer, erm_loss, expected_regularizer, explicit_regularizer, induced_regularizer, mask_gradient,
    penalty_gradient, penalty_objective, vectorized_regularizer, FactorPair, Measurement, MeasurementModel, Observation,
    SensingSample,
};
use nalgebra::DMatrix;

fn gaussian(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gaussian())
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn probs(k: usize, rng: &mut SeededRng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.2 + rng.uniform()).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / t).collect()
}

#[test]
fn singular_values_match_nalgebra() {
    let mut rng = SeededRng::from_seed(1);
    for k in 0..60 {
        let (r, c) = (1 + k % 12, 1 + (k * 7) % 12);
        let m = gaussian(r, c, &mut rng);
        let ours = svd(&m).unwrap().singular_values;
        let mut theirs: Vec<f64> = to_na(&m).singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(ours.len(), theirs.len());
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10 * theirs[0].max(1.0), "{r}x{c}: {a} vs {b}");
        }
        assert!((spectral_norm(&m).unwrap() - theirs[0]).abs() < 1e-10 * theirs[0]);
    }
}

#[test]
fn nuclear_norm_matches_eigenvalues_of_gram() {
    let mut rng = SeededRng::from_seed(2);
    for _ in 0..20 {
        let m = gaussian(4, 4, &mut rng);
        let gram = to_na(&m).transpose() * to_na(&m);
        let eig = nalgebra::SymmetricEigen::new(gram);
        let expect: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
        assert!((nuclear_norm(&m).unwrap() - expect).abs() < 1e-10 * expect);
    }
}

#[test]
fn pseudo_inverse_satisfies_penrose_identities() {
    let mut rng = SeededRng::from_seed(3);
    for _ in 0..20 {
        let (a, b) = (gaussian(4, 2, &mut rng), gaussian(4, 2, &mut rng));
        let m = a.matmul_transpose(&b);
        let p = pseudo_inverse(&m, 1e-12).unwrap();
        let scale = m.frobenius_norm();
        assert!(m.matmul(&p).matmul(&m).sub(&m).max_abs() < 1e-8 * scale);
        let pmp = p.matmul(&m).matmul(&p);
        assert!(pmp.sub(&p).max_abs() < 1e-8 * p.frobenius_norm());
        assert!(m.matmul(&p).asymmetry() < 1e-8 && p.matmul(&m).asymmetry() < 1e-8);
        // Full-rank factorization M = ABᵀ gives M† = B(BᵀB)⁻¹(AᵀA)⁻¹Aᵀ.
        let (na, nb) = (to_na(&a), to_na(&b));
        let ata = (na.transpose() * &na).try_inverse().unwrap();
        let btb = (nb.transpose() * &nb).try_inverse().unwrap();
        let theirs = &nb * btb * ata * na.transpose();
        let diff = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| (p[(i, j)] - theirs[(i, j)]).abs());
        assert!(diff.fold(0.0, f64::max) < 1e-10 * p.frobenius_norm());
    }
}

#[test]
fn psd_spectrum_matches_symmetric_eigensolver() {
    let mut rng = SeededRng::from_seed(4);
    let x = gaussian(6, 40, &mut rng);
    let c = x.second_moment();
    let ours = psd_spectrum(&c).unwrap();
    let mut theirs: Vec<f64> = nalgebra::SymmetricEigen::new(to_na(&c)).eigenvalues.iter().copied().collect();
    theirs.sort_by(|a, b| b.total_cmp(a));
    for (a, b) in ours.iter().zip(&theirs) {
        assert!((a - b).abs() < 1e-10 * theirs[0]);
    }
}

#[test]
fn whitened_sample_norm_is_n_times_rank() {
    let mut rng = SeededRng::from_seed(5);
    let (d, n) = (5, 2000);
    let mix = gaussian(d, d, &mut rng);
    let x = mix.matmul(&gaussian(d, n, &mut rng));
    let p = pseudo_inverse(&x.second_moment(), 1e-12).unwrap();
    let p = p.add(&p.transpose()).scale(0.5);
    let sq = mahalanobis_data_norm(&x, &p).unwrap().powi(2);
    let target = (n * d) as f64;
    assert!((sq - target).abs() < 0.1 * target, "{sq} vs {target}");
}

fn random_instance(rng: &mut SeededRng) -> (FactorPair, SensingSample) {
    let (d2, d0, d1) = (2 + rng.index(5), 2 + rng.index(5), 1 + rng.index(4));
    let f = FactorPair::new(gaussian(d2, d1, rng), gaussian(d0, d1, rng)).unwrap();
    let obs: Vec<Observation> = (0..20)
        .map(|k| {
            if k % 3 == 0 {
                Observation {
                    measurement: Measurement::Dense(gaussian(d2, d0, rng)),
                    y: rng.gaussian(),
                }
            } else {
                Observation::entry(rng.index(d2), rng.index(d0), rng.gaussian())
            }
        })
        .collect();
    (f.clone(), SensingSample::new(d2, d0, obs).unwrap())
}

fn dense_of(obs: &Observation, rows: usize, cols: usize) -> Matrix {
    match &obs.measurement {
        Measurement::Dense(a) => a.clone(),
        Measurement::Entry { row, col } => Matrix::from_fn(rows, cols, |i, k| if i == *row && k == *col { 1.0 } else { 0.0 }),
    }
}

#[test]
fn sensing_loss_and_regularizer_match_naive_loops() {
    let mut rng = SeededRng::from_seed(6);
    for _ in 0..20 {
        let (f, s) = random_instance(&mut rng);
        let m = f.product();
        let (mut loss, mut reg) = (0.0, 0.0);
        for obs in s.observations() {
            let a = dense_of(obs, s.rows(), s.cols());
            let mut inner = 0.0;
            for i in 0..s.rows() {
                for k in 0..s.cols() {
                    inner += m[(i, k)] * a[(i, k)];
                }
            }
            loss += (obs.y - inner).powi(2);
            for w in 0..f.width() {
                let mut t = 0.0;
                for i in 0..s.rows() {
                    for k in 0..s.cols() {
                        t += f.u[(i, w)] * a[(i, k)] * f.v[(k, w)];
                    }
                }
                reg += t * t;
            }
        }
        let n = s.len() as f64;
        assert!((erm_loss(&f, &s).unwrap() - loss / n).abs() < 1e-12 * (1.0 + loss / n));
        assert!((explicit_regularizer(&f, &s).unwrap() - reg / n).abs() < 1e-12 * (1.0 + reg / n));
    }
}

#[test]
fn enumeration_agrees_with_closed_forms() {
    let mut rng = SeededRng::from_seed(7);
    for k in 0..30 {
        let d = DropoutConfig::new(0.05 + 0.03 * k as f64).unwrap();
        let (f, s) = random_instance(&mut rng);
        let exact = exact_dropout_objective(&f, &s, &d).unwrap();
        assert!((exact - penalty_objective(&f, &s, &d).unwrap()).abs() < 1e-10 * exact);

        let net = TwoLayerNet::new(gaussian(1 + k % 2, 1 + k % 7, &mut rng), gaussian(3, 1 + k % 7, &mut rng)).unwrap();
        let data = LabeledSet::new(gaussian(3, 15, &mut rng), Matrix::from_fn(1 + k % 2, 15, |_, _| rng.uniform() - 0.5)).unwrap();
        let exact = exact_dropout_objective_relu(&net, &data, &d).unwrap();
        assert!((exact - penalty_objective_relu(&net, &data, &d).unwrap()).abs() < 1e-10 * exact);
    }
}

#[test]
fn single_factor_at_half_rate() {
    // E B² = 2 at p = ½, so the objective is Ê(y − m)² + Ê m².
    let f = FactorPair::new(Matrix::from_rows(&[&[1.5], &[-0.4]]), Matrix::from_rows(&[&[0.7], &[2.0], &[-1.0]])).unwrap();
    let s = SensingSample::from_entries(2, 3, [(0, 0, 0.3), (1, 2, -0.8), (0, 1, 2.5), (1, 0, 0.0)]).unwrap();
    let d = DropoutConfig::new(0.5).unwrap();
    let m = f.product();
    let expect = s
        .observations()
        .iter()
        .map(|o| {
            let (i, k) = o.entry_cell().unwrap();
            (o.y - m[(i, k)]).powi(2) + m[(i, k)].powi(2)
        })
        .sum::<f64>()
        / s.len() as f64;
    assert!((penalty_objective(&f, &s, &d).unwrap() - expect).abs() < 1e-12);
    assert!((exact_dropout_objective(&f, &s, &d).unwrap() - expect).abs() < 1e-12);

    let net = TwoLayerNet::new(Matrix::from_rows(&[&[0.9]]), Matrix::from_rows(&[&[1.0], &[-2.0]])).unwrap();
    let data = LabeledSet::new(Matrix::from_rows(&[&[1.0, 0.5, -1.0], &[0.2, -0.3, 0.1]]), Matrix::from_rows(&[&[0.4, -0.1, 0.9]])).unwrap();
    let expect = (0..3)
        .map(|i| {
            let m = forward(&net, &data.input(i)).unwrap()[0];
            (data.target(i)[0] - m).powi(2) + m * m
        })
        .sum::<f64>()
        / 3.0;
    assert!((penalty_objective_relu(&net, &data, &d).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn vectorized_regularizer_matches_naive_loop() {
    let mut rng = SeededRng::from_seed(8);
    let d = DropoutConfig::new(0.3).unwrap();
    for _ in 0..10 {
        let m = gaussian(3, 4, &mut rng);
        let diag: Vec<f64> = (0..12).map(|_| rng.uniform()).collect();
        let c = Matrix::from_diag(&diag);
        let mut expect = 0.0;
        for col in 0..4 {
            for row in 0..3 {
                expect += diag[col * 3 + row] * m[(row, col)].powi(2);
            }
        }
        let got = vectorized_regularizer(&m, &c, &d).unwrap();
        assert!((got - d.lambda() * expect).abs() < 1e-12);
    }
}

#[test]
fn forward_and_path_norm_match_naive_loops() {
    let mut rng = SeededRng::from_seed(9);
    for k in 0..20 {
        let (d0, d1, d2) = (1 + k % 5, 1 + k % 7, 1 + k % 3);
        let net = TwoLayerNet::new(gaussian(d2, d1, &mut rng), gaussian(d0, d1, &mut rng)).unwrap();
        let x: Vec<f64> = (0..d0).map(|_| rng.gaussian()).collect();
        let a = forward(&net, &x).unwrap();
        let b = forward_naive(&net, &x);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
        let pn = path_norm_naive(&net);
        assert!((path_norm_sq(&net) - pn).abs() < 1e-12 * pn.max(1.0));
    }
}

#[test]
fn relu_regularizer_matches_naive_sum() {
    let mut rng = SeededRng::from_seed(10);
    let net = TwoLayerNet::new(gaussian(2, 5, &mut rng), gaussian(3, 5, &mut rng)).unwrap();
    let data = LabeledSet::new(gaussian(3, 30, &mut rng), Matrix::zeros(2, 30)).unwrap();
    let d = DropoutConfig::new(0.4).unwrap();
    let mut expect = 0.0;
    for j in 0..5 {
        let u2: f64 = (0..2).map(|k| net.top[(k, j)].powi(2)).sum();
        let a2: f64 = (0..30)
            .map(|i| {
                let z: f64 = (0..3).map(|r| net.bottom[(r, j)] * data.inputs()[(r, i)]).sum();
                z.max(0.0).powi(2)
            })
            .sum::<f64>()
            / 30.0;
        expect += u2 * a2;
    }
    let got = explicit_regularizer_relu(&net, &data, &d).unwrap();
    assert!((got - d.lambda() * expect).abs() < 1e-12);
    let lhs = empirical_loss(&net, &data).unwrap() + got;
    assert!((penalty_objective_relu(&net, &data, &d).unwrap() - lhs).abs() < 1e-12);
}

#[test]
fn one_dimensional_gaussian_activation_moment_is_half() {
    let net = TwoLayerNet::new(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[1.0]])).unwrap();
    let d = DropoutConfig::new(0.5).unwrap();
    // λ/2 · ‖u‖²‖v‖² = ½ with λ = 1.
    let check = isotropy_regularizer_check(&net, standard_gaussian, 400_000, &d, &SeededRng::from_seed(11)).unwrap();
    assert!((check.rhs - 0.5).abs() < 1e-15);
    assert!(check.passes(3.0), "{:?}", check.lhs);
    let mut rng = SeededRng::from_seed(12);
    let x = Matrix::from_fn(1, 200_000, |_, _| rng.gaussian());
    let data = LabeledSet::new(x, Matrix::zeros(1, 200_000)).unwrap();
    assert!((activation_second_moments(&net, &data).unwrap()[0] - 0.5).abs() < 0.01);
}

#[test]
fn equalized_factors_match_numerical_minimization() {
    let mut rng = SeededRng::from_seed(13);
    let m = gaussian(5, 4, &mut rng);
    let model = MeasurementModel::Gaussian { rows: 5, cols: 4 };
    let theta = induced_regularizer(&m, &model, 6).unwrap();
    let descent = minimize_expected_regularizer(&m, &model, 6, 10_000, &mut rng).unwrap();
    assert!(descent.feasibility_error < 1e-8);
    assert!((descent.value - theta).abs() < 1e-6 * theta.max(1.0), "{} vs {theta}", descent.value);

    let m = gaussian(4, 4, &mut rng);
    let model = MeasurementModel::indicator(probs(4, &mut rng), probs(4, &mut rng)).unwrap();
    let theta = induced_regularizer(&m, &model, 5).unwrap();
    let f = equalized_minimizer(&m, &model, 5).unwrap();
    assert!(f.product().sub(&m).max_abs() < 1e-10);
    assert!((expected_regularizer(&f, &model).unwrap() - theta).abs() < 1e-10 * theta);
    let descent = minimize_expected_regularizer(&m, &model, 5, 10_000, &mut rng).unwrap();
    assert!((descent.value - theta).abs() < 1e-6 * theta.max(1.0), "{} vs {theta}", descent.value);
}

#[test]
fn sampled_mask_gradient_is_unbiased() {
    let mut rng = SeededRng::from_seed(14);
    let f = FactorPair::new(gaussian(3, 3, &mut rng), gaussian(2, 3, &mut rng)).unwrap();
    let s = SensingSample::from_entries(3, 2, [(0, 0, 0.5), (1, 1, -0.3), (2, 0, 1.0), (0, 1, 0.2)]).unwrap();
    let d = DropoutConfig::new(0.3).unwrap();
    let idx: Vec<usize> = (0..s.len()).collect();
    let trials = 100_000;
    let exact = penalty_gradient(&f, &s, &d).unwrap();
    let k = exact.u.as_slice().len() + exact.v.as_slice().len();
    let (mut sum, mut sq) = (vec![0.0; k], vec![0.0; k]);
    for _ in 0..trials {
        let g = mask_gradient(&f, &s, &idx, &d, &mut rng);
        for (c, x) in g.u.as_slice().iter().chain(g.v.as_slice()).enumerate() {
            sum[c] += x;
            sq[c] += x * x;
        }
    }
    let t = trials as f64;
    for (c, e) in exact.u.as_slice().iter().chain(exact.v.as_slice()).enumerate() {
        let mean = sum[c] / t;
        let se = ((sq[c] / t - mean * mean).max(0.0) / t).sqrt();
        assert!((mean - e).abs() <= 3.0 * se + 1e-12, "coordinate {c}: {mean} vs {e} (se {se})");
    }
}
