use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trudinger::cli::{report_error, run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "trudinger", version, about = "Barrier certification and finite-difference runs for Trudinger's equation")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct and sweep the requested barriers.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve on a grid and export snapshots.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a grid-refinement study.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full acceptance matrix.
    Suite {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (command, config_path, out, seed) = match args.command {
        Cmd::Verify { config, out } => (Command::Verify, Some(config), out, None),
        Cmd::Solve { config, out } => (Command::Solve, Some(config), out, None),
        Cmd::Converge { config, out } => (Command::Converge, Some(config), out, None),
        Cmd::Suite { out, seed } => (Command::Suite, None, out, Some(seed)),
    };
    let config = match (config_path, seed) {
        (Some(path), _) => RunConfig::from_path(&path).map(Some),
        (None, Some(seed)) => Ok(Some(RunConfig { seed, ..serde_json::from_str("{}").expect("empty config parses") })),
        (None, None) => Ok(None),
    };
    let outcome = config.and_then(|cfg| run(command, cfg.as_ref(), &out));
    let code = match outcome {
        Ok(o) => {
            for r in &o.report.results {
                println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.name);
            }
            o.report.exit_code()
        }
        Err(err) => report_error(&err, Some(&out)),
    };
    ExitCode::from(code as u8)
}
