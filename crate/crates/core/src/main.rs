use std::path::PathBuf;
use std::process::ExitCode;

use boolean_lab::cli::{self, Status};
use boolean_lab::config::RunConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boolean-lab", version, about = "Covariances of intrinsic volumes of planar Boolean models of rectangles")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML); built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Closed-form densities and covariances over the intensity list.
    Analytic,
    /// Monte Carlo runs with per-sample CSV and summary report.
    Simulate,
    /// Monte Carlo covariances against the closed forms.
    Validate,
    /// Histograms and KS distances of the standardized functionals.
    Hist,
}

fn run(args: Args) -> boolean_lab::Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if args.workers.is_some() {
        cfg.run.workers = args.workers;
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    cfg.validate()?;
    let out = cfg.output.dir.clone();
    cli::write_file(&out.join("config.toml"), &cfg.to_toml()?)?;
    match args.command {
        Command::Analytic => {
            let csv = cli::cmd_analytic(cfg.model.a, cfg.model.b, &cfg.model.gamma)?;
            cli::write_file(&out.join("analytic.csv"), &csv)?;
            print!("{csv}");
        }
        Command::Simulate => {
            for s in cli::cmd_simulate(&cfg, &out)? {
                println!("gamma={} M={} mean density={:?}", s.gamma, s.replications, s.mean_density);
            }
        }
        Command::Validate => {
            let reports = cli::cmd_validate(&cfg, &out)?;
            for r in &reports {
                let worst = r.entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
                println!("gamma={} status={:?} max|z|={worst:.2}", r.gamma, r.status);
            }
            return Ok(reports.iter().all(|r| r.status == Status::Pass));
        }
        Command::Hist => {
            for r in cli::cmd_hist(&cfg, &out)? {
                println!("gamma={} ks={:?} overflow={:?}", r.gamma, r.ks, r.overflow);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
