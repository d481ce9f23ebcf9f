use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

mod config;
mod demo;
mod experiments;

use config::ExperimentConfig;

/// Experiments and a time-stepping demo for the generalized
/// Dirichlet–Neumann operator with vorticity.
#[derive(Parser)]
#[command(name = "wavedno", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiments listed in a config and write the result bundle.
    Run(Common),
    /// Integrate the surface system with RK4 and write norms and snapshots.
    Demo(Common),
}

#[derive(Args)]
struct Common {
    /// TOML or JSON config.
    config: PathBuf,
    /// Output directory, overriding `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random modes, overriding `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn setup(&self) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
        }
        let mut cfg = ExperimentConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| Path::new("results").to_path_buf());
        Ok((cfg, out))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::Run(c) => {
            let (cfg, out) = c.setup()?;
            let b = experiments::run_all(&cfg, &out)?;
            for o in &b.experiments {
                println!("{} {}", if o.pass { "PASS" } else { "FAIL" }, o.name);
            }
            println!("wrote {}", out.join("summary.json").display());
            Ok(b.pass)
        }
        Cmd::Demo(c) => {
            let (cfg, out) = c.setup()?;
            let r = demo::run_demo(&cfg, &out).context("demo aborted")?;
            println!("{} steps, {} snapshots, max mean drift {:.3e}", r.steps, r.snapshots, r.max_mean_drift);
            Ok(true)
        }
    }
}
