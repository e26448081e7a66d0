use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use covert_noma::cli::{resolve, run, sidecar_path, Experiment, Overrides};

/// Covertness and secrecy experiments for two-phase CDRT-NOMA networks.
#[derive(Debug, Parser)]
#[command(name = "covert-noma", version)]
struct Args {
    experiment: Experiment,
    /// JSON file overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration value, e.g. `params.n_samples=3` or `sweep.steps=11`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// CSV output path; the JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per estimate.
    #[arg(long)]
    trials: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let ov = Overrides {
        config_file: args.config,
        sets: args.sets,
        out: args.out,
        seed: args.seed,
        trials: args.trials,
    };
    let cfg = match resolve(args.experiment, &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(out) => {
            for r in &out.reports {
                println!("{}", r.summary());
                for c in &r.checks {
                    println!(
                        "    [{}] {}: {}",
                        if c.passed { "ok" } else { "FAIL" },
                        c.label,
                        c.detail
                    );
                }
            }
            let path = PathBuf::from(&cfg.output_path);
            eprintln!("wrote {} and {}", path.display(), sidecar_path(&path).display());
            if out.reports.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
