//! The induced regularizer `Θ(M)`, the smallest expected regularizer over all width-`d1`
//! factorizations of `M`. The closed form is attained by equalized factors, and numerical
//! minimization never goes below it.

use dropcap::numerics::{nuclear_norm, Matrix, SeededRng};
use dropcap::oracle::minimize_expected_regularizer;
use dropcap::sensing::{equalized_minimizer, expected_regularizer, induced_regularizer, weighted_matrix, MeasurementModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::from_seed(7);
    let m = Matrix::from_fn(5, 4, |_, _| rng.gaussian());
    let d1 = 6;
    let models = [
        ("gaussian", MeasurementModel::Gaussian { rows: 5, cols: 4 }),
        ("uniform", MeasurementModel::uniform_indicator(5, 4)),
        (
            "weighted",
            MeasurementModel::indicator(vec![0.4, 0.3, 0.1, 0.1, 0.1], vec![0.1, 0.2, 0.3, 0.4])?,
        ),
    ];
    for (name, model) in &models {
        let theta = induced_regularizer(&m, model, d1)?;
        let nuc = nuclear_norm(&weighted_matrix(&m, model)?)?;
        let eq = equalized_minimizer(&m, model, d1)?;
        let attained = expected_regularizer(&eq, model)?;
        let descent = minimize_expected_regularizer(&m, model, d1, 5000, &mut rng.derive(1))?;
        println!("{name}");
        println!("  theta                    {theta:.10}");
        println!("  weighted nuclear^2 / d1  {:.10}", nuc * nuc / d1 as f64);
        println!("  equalized factors        {attained:.10}  (|UV^T - M| = {:.1e})", eq.product().sub(&m).max_abs());
        println!(
            "  numerical minimum        {:.10}  after {} iterations",
            descent.value, descent.iterations
        );
    }
    Ok(())
}
