//! Capacity measures of a two-layer ReLU network on a sample: the dropout regularizer, the
//! flow-based `α̂`, the co-adaptation score `φ`, and `β̂`. Also checks the path-norm form the
//! regularizer takes under isotropic Gaussian inputs.

use dropcap::datasets::{gen_planted_teacher, InputDist};
use dropcap::dropout::DropoutConfig;
use dropcap::numerics::SeededRng;
use dropcap::relunet::{capacity_report, he_init_net, isotropy_regularizer_check, standard_gaussian};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::from_seed(3);
    let task = gen_planted_teacher(10, 4, 2000, 0, InputDist::Gaussian, 0.1, &mut rng)?;
    let d = DropoutConfig::new(0.5)?;
    for width in [4, 16, 64] {
        let net = he_init_net(10, width, 1, &mut rng);
        let r = capacity_report(&net, &task.train, &d, 256, &mut rng)?;
        println!(
            "width {width:>3}: R = {:.5}  alpha = {:.5}  phi = {:.4}  beta = {:.4}  path_norm^2 = {:.5}  |X|_C = {:.2}  rank C = {}",
            r.reg_value, r.alpha_hat, r.phi, r.beta_hat, r.path_norm_sq, r.x_mahalanobis, r.rank_c
        );
        let iso = isotropy_regularizer_check(&net, standard_gaussian, 200_000, &d, &rng.derive(width as u64))?;
        println!(
            "           population R = {:.5} +- {:.5}, lambda/2 * path_norm^2 = {:.5}",
            iso.lhs.mean, iso.lhs.stderr, iso.rhs
        );
    }
    Ok(())
}
