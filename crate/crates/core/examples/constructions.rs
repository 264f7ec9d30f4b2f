//! Two explicit constructions. A three-atom distribution on the unit circle whose weight vector
//! has an activation moment of 1 but norm `1/√δ`, and a ReLU network of any even width that
//! computes a linear function exactly.

use dropcap::numerics::{dot, Matrix, SeededRng};
use dropcap::relunet::{counterexample_distribution, forward, lower_bound_embedding, path_norm_sq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>12} {:>12} {:>12}", "delta", "E s(w.x)^2", "|w|^2", "|E x|");
    for delta in [0.25, 0.1, 0.01, 0.001] {
        let c = counterexample_distribution(delta)?;
        let mean = c.mean();
        println!(
            "{delta:>8} {:>12.9} {:>12.3} {:>12.2e}",
            c.activation_second_moment(),
            dot(&c.w, &c.w),
            dot(&mean, &mean).sqrt()
        );
    }

    let w = [0.5, -1.0, 2.0];
    let mut rng = SeededRng::from_seed(1);
    let x = Matrix::from_fn(3, 1000, |_, _| rng.gaussian());
    for d1 in [2, 8, 32] {
        let net = lower_bound_embedding(&w, d1)?;
        let mut worst = 0.0f64;
        for i in 0..x.cols() {
            let xi = x.column(i);
            worst = worst.max((forward(&net, &xi)?[0] - dot(&w, &xi)).abs());
        }
        println!("width {d1:>2}: max |f(x) - w.x| = {worst:.1e}, path_norm^2 = {:.4}", path_norm_sq(&net));
    }
    Ok(())
}
