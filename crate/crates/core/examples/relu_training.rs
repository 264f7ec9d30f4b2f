//! Dropout training of a two-layer ReLU network on a planted-teacher regression task, printing
//! the per-epoch metrics CSV for one seed and rate.

use dropcap::cli::{run_relu, RunConfig, Task};
use dropcap::datasets::write_records_to;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::defaults(Task::Relu);
    cfg.set("width", "32")?;
    cfg.set("lr", "0.02")?;
    cfg.set("batch", "16")?;
    cfg.set("epochs", "40")?;
    cfg.set("noise", "0.3")?;
    let run = run_relu(&cfg, 0, 0.3)?;
    write_records_to(&run.records, std::io::stdout().lock())?;
    Ok(())
}
