//! Runs the oracle cross-checks on a few seeds, then again with a deliberately miscalibrated
//! `λ` to show that the identity checks notice.

use dropcap::cli::{cmd_audit, RunConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::defaults(Task::Mc);
    cfg.set("seeds", "0..5")?;
    cfg.set("mc_trials", "20000")?;
    print!("{}", cmd_audit(&cfg)?);
    cfg.set("inject_bug", "true")?;
    let report = cmd_audit(&cfg)?;
    println!("\nwith lambda scaled by 1.01 (exit code {}):", report.exit_code());
    print!("{report}");
    Ok(())
}
