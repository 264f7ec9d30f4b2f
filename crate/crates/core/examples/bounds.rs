//! Generalization bounds evaluated for a range of sample sizes, directly and through the
//! measured-quantities CSV reader used by the `bounds` subcommand.

use dropcap::cli::evaluate_measured;
use dropcap::relunet::{gen_bound_classification, gen_bound_regression, gen_bound_symmetrized, rademacher_bound};
use dropcap::sensing::{gen_bound_mc, gen_bound_optimistic};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let delta = 0.05;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "n", "mc", "optimist", "rademacher", "regress", "symmetr", "classif");
    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let x = (n as f64).sqrt() * 3.0;
        println!(
            "{n:>8} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            gen_bound_mc(0.05, 0.5, 100, n, delta)?,
            gen_bound_optimistic(0.5, 100, n, delta, 1.0)?,
            rademacher_bound(1.0, 0.5, x, n)?,
            gen_bound_regression(0.05, 1.0, 0.5, x, n, delta)?,
            gen_bound_symmetrized(0.05, 1.0, x, n, delta)?,
            gen_bound_classification(0.05, 1.0, 0.5, x, n, delta, false)?,
        );
    }

    let measured = "kind,train_loss,alpha,beta,x_mahal,n,d2,d0,min_pq,spectral_norm\n\
                    mc,0.1,0.8,,,5000,100,80,1e-4,0.9\n\
                    mc,0.1,0.8,,,5000,50,80,1e-9,1.5\n\
                    regression,0.02,2.0,0.4,150,5000,,,,\n";
    print!("\n{}", evaluate_measured(measured.as_bytes(), delta)?.to_csv()?);
    Ok(())
}
