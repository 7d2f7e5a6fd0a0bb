use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use locaudit_cli::{plot, run, ExperimentConfig, ExperimentRecord, RunOptions};
use locaudit_core::auditor::{lower_bound_samples, upper_bound_samples, AuditorConfig};

#[derive(Parser)]
#[command(name = "locaudit", version, about = "Run and plot local-explanation auditing experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to `output.dir` from the config, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "AUDIT_WORKERS")]
        workers: Option<usize>,
    },
    /// Draw a record as an SVG chart.
    Plot {
        record: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the sample-size bounds for a parameter set.
    Bounds {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eps1: f64,
        #[arg(long)]
        eps2: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        lambda: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.cmd {
        Cmd::Run { config, seed, out, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out
                .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let rec = run(&cfg, &RunOptions { seed, workers })?;
            rec.write(&dir)?;
            let verdict = rec.aggregate.verdict.expect("run sets a verdict");
            println!("{} {:?} -> {}", cfg.kind.as_str(), verdict, dir.display());
            for (k, v) in &rec.aggregate.stats {
                println!("  {k} = {v}");
            }
            Ok(verdict.exit_code() as u8)
        }
        Cmd::Plot { record, out } => {
            let rec = ExperimentRecord::load(&record)?;
            std::fs::write(&out, plot::render(&rec)).with_context(|| format!("writing {}", out.display()))?;
            Ok(0)
        }
        Cmd::Bounds { gamma, eps1, eps2, delta, lambda } => {
            let cfg = AuditorConfig::new(gamma, eps1, eps2, delta)?;
            println!("m (anchors)            = {}", cfg.m());
            println!("k (validation points)  = {}", cfg.k());
            println!("upper bound n          = {}", upper_bound_samples(&cfg, lambda)?);
            match lower_bound_samples(&cfg, lambda) {
                Ok(n) => println!("lower bound n          = {n}"),
                Err(e) => println!("lower bound n          = n/a ({e})"),
            }
            Ok(0)
        }
    }
}
