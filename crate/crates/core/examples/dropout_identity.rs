//! Dropout objective versus its closed form `L̂ + λR̂`, for a factored sensing model and a
//! two-layer ReLU network. Each line sets the closed form against exact enumeration over all
//! masks, with a Monte-Carlo estimate alongside.

use dropcap::cli::{random_relu_instance, random_sensing_instance};
use dropcap::dropout::DropoutConfig;
use dropcap::numerics::SeededRng;
use dropcap::oracle::{exact_dropout_objective, exact_dropout_objective_relu};
use dropcap::relunet::{dropout_objective_mc_relu, empirical_loss, explicit_regularizer_relu};
use dropcap::sensing::{dropout_objective_mc, erm_loss, explicit_regularizer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SeededRng::from_seed(2024);
    println!("{:<8} {:>5} {:>14} {:>14} {:>14} {:>8}", "model", "rate", "exact", "monte-carlo", "closed form", "z");
    for rate in [0.1, 0.3, 0.5, 0.8] {
        let d = DropoutConfig::new(rate)?;

        let (f, s) = random_sensing_instance(&mut rng);
        let closed = erm_loss(&f, &s)? + d.lambda() * explicit_regularizer(&f, &s)?;
        let mc = dropout_objective_mc(&f, &s, &d, 200_000, &rng.derive(1))?;
        let exact = exact_dropout_objective(&f, &s, &d)?;
        println!("{:<8} {rate:>5} {exact:>14.8} {:>14.8} {closed:>14.8} {:>8.3}", "sensing", mc.mean, mc.z_score(closed));

        let (net, data) = random_relu_instance(&mut rng);
        let closed = empirical_loss(&net, &data)? + explicit_regularizer_relu(&net, &data, &d)?;
        let mc = dropout_objective_mc_relu(&net, &data, &d, 200_000, &rng.derive(2))?;
        let exact = exact_dropout_objective_relu(&net, &data, &d)?;
        println!("{:<8} {rate:>5} {exact:>14.8} {:>14.8} {closed:>14.8} {:>8.3}", "relu", mc.mean, mc.z_score(closed));
    }
    Ok(())
}
