//! Dropout training of a factored model on a noisy low-rank completion task. Larger rates fit the
//! training entries less closely and shrink the generalization gap.

use dropcap::cli::{cmd_mc_train, RunConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::defaults(Task::Mc);
    cfg.set("seeds", "0..4")?;
    cfg.set("rates", "0,0.1,0.2,0.3")?;
    cfg.set("batch", "100")?;
    cfg.set("epochs", "100")?;
    cfg.set("lr", "0.5")?;
    cfg.set("noise", "0.5")?;
    let report = cmd_mc_train(&cfg)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "rate", "train", "test", "gap");
    for &rate in &cfg.rates {
        let last: Vec<_> = report.runs.iter().filter(|r| r.rate == rate).map(|r| r.last()).collect();
        let mean = |f: &dyn Fn(&dropcap::datasets::ExperimentRecord) -> f64| last.iter().map(|r| f(r)).sum::<f64>() / last.len() as f64;
        println!(
            "{rate:>5} {:>10.4} {:>10.4} {:>10.4}",
            mean(&|r| r.train_loss),
            mean(&|r| r.test_loss.unwrap_or(f64::NAN)),
            mean(&|r| r.gap.unwrap_or(f64::NAN))
        );
    }
    Ok(())
}
