use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dropcap::cli::{
    cmd_audit, cmd_bounds, cmd_mc_train, cmd_relu_train, write_csv_stdout, RunConfig, Task, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(name = "dropcap", version, about = "Dropout regularization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train factorization models on a completion task.
    McTrain(Common),
    /// Train two-layer ReLU networks.
    ReluTrain(Common),
    /// Run the oracle cross-checks.
    Audit(Common),
    /// Evaluate bound formulas from a measured-quantities CSV.
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long = "rate")]
    rates: Vec<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_parser = ["mask", "penalty"])]
    mode: Option<String>,
    #[arg(long)]
    symmetrize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    /// Extra settings as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    settings: Vec<String>,
    #[arg(long, hide = true)]
    inject_bug: bool,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let mut o: Vec<(String, String)> = Vec::new();
        for s in &self.settings {
            let (k, v) = s.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            o.push((k.into(), v.into()));
        }
        let join = |v: &[String]| v.join(",");
        if !self.seeds.is_empty() {
            o.push(("seeds".into(), join(&self.seeds.iter().map(u64::to_string).collect::<Vec<_>>())));
        }
        if !self.rates.is_empty() {
            o.push(("rates".into(), join(&self.rates.iter().map(f64::to_string).collect::<Vec<_>>())));
        }
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.into(), v));
            }
        };
        put("width", self.width.map(|x| x.to_string()));
        put("lr", self.lr.map(|x| x.to_string()));
        put("batch", self.batch.map(|x| x.to_string()));
        put("epochs", self.epochs.map(|x| x.to_string()));
        put("mode", self.mode.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("delta", self.delta.map(|x| x.to_string()));
        if self.symmetrize {
            put("symmetrize", Some("true".into()));
        }
        if self.inject_bug {
            put("inject_bug", Some("true".into()));
        }
        Ok(o)
    }
}

fn run(cli: Cli) -> Result<i32, dropcap::cli::CliError> {
    let (task, common) = match &cli.command {
        Command::McTrain(c) | Command::Audit(c) | Command::Bounds(c) => (Task::Mc, c),
        Command::ReluTrain(c) => (Task::Relu, c),
    };
    let overrides = common.overrides().map_err(dropcap::cli::CliError::Config)?;
    let cfg = RunConfig::resolve(task, common.config.as_deref(), &overrides)?;
    match cli.command {
        Command::McTrain(_) | Command::ReluTrain(_) => {
            let report = if task == Task::Mc { cmd_mc_train(&cfg)? } else { cmd_relu_train(&cfg)? };
            if cfg.out.is_none() {
                write_csv_stdout(&report.records())?;
            }
            for (seed, rate) in report.diverged() {
                eprintln!("diverged: seed {seed}, rate {rate}");
            }
            Ok(report.exit_code())
        }
        Command::Audit(_) => {
            let report = cmd_audit(&cfg)?;
            print!("{report}");
            Ok(report.exit_code())
        }
        Command::Bounds(_) => {
            let report = cmd_bounds(&cfg)?;
            if cfg.out.is_none() {
                print!("{}", report.to_csv()?);
            }
            if report.flagged() > 0 {
                eprintln!("{} rows flagged", report.flagged());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_CONFIG as u8))
}
