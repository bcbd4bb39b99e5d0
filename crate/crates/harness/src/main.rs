use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spde_harness::{compare_reports, experiments, CompareError, RunConfig, MASTER_SEED_ENV};

#[derive(Parser)]
#[command(
    name = "spde-lab",
    about = "Spectral laboratory for stochastic evolution equations on (0,1)",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a canned experiment from a JSON config.
    Run {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Also write one CSV per sample path.
        #[arg(long)]
        dump_paths: bool,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diff two report CSVs sharing a schema.
    Compare { report_a: PathBuf, report_b: PathBuf },
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config, dump_paths, out } => run_cmd(&config, dump_paths, out),
        Cmd::Compare { report_a, report_b } => compare_cmd(&report_a, &report_b),
    }
}

fn run_cmd(config_path: &Path, dump_paths: bool, out: Option<PathBuf>) -> ExitCode {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    if let Ok(seed_text) = std::env::var(MASTER_SEED_ENV) {
        match seed_text.parse::<u64>() {
            Ok(seed) => {
                eprintln!("master seed overridden by {MASTER_SEED_ENV} = {seed}");
                cfg.mc.master_seed = seed;
            }
            Err(_) => {
                eprintln!("invalid {MASTER_SEED_ENV} value `{seed_text}`");
                return ExitCode::from(2);
            }
        }
    }
    let dump = dump_paths || cfg.dump_paths;
    let out_dir = out.unwrap_or_else(|| cfg.out_dir.clone());
    match experiments::run(&cfg, &out_dir, dump) {
        Ok(artifacts) => {
            println!(
                "experiment {} finished in {:.2}s: {} file(s), {} aborted path(s), exit {}",
                cfg.experiment.as_str(),
                artifacts.wall_seconds,
                artifacts.files.len(),
                artifacts.aborted_paths,
                artifacts.exit_code
            );
            if artifacts.exit_code == 3 {
                eprintln!(
                    "blow-up budget exceeded: {}/{} paths aborted",
                    artifacts.aborted_paths, artifacts.total_paths
                );
            }
            if artifacts.violated {
                eprintln!("at least one regularity verdict is `violated`");
            }
            ExitCode::from(artifacts.exit_code as u8)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn compare_cmd(a: &Path, b: &Path) -> ExitCode {
    match compare_reports(a, b) {
        Ok(out) => {
            if out.identical {
                println!("identical");
            } else {
                for d in &out.diffs {
                    println!("{d}");
                }
                println!("{} difference(s)", out.diffs.len());
            }
            ExitCode::SUCCESS
        }
        Err(e @ CompareError::SchemaMismatch { .. }) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
