use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlrecon_cli::{run, summary, validate, RunOptions, EXIT_CONFIG_INVALID, EXIT_OK};

#[derive(Parser)]
#[command(name = "nlrecon", version, about = "Run reconstruction and axiom-check scenarios")]
struct Cli {
    /// Worker threads for parallel integrals.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Do not read or write the on-disk integral cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiply every pass/fail threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all checks of a scenario and write the report.
    Run { config: PathBuf },
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
    /// Print a report.
    Report {
        /// One line per check.
        #[arg(long)]
        summary: bool,
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: --jobs ignored: {e}");
        }
    }
    let opts = RunOptions { no_cache: cli.no_cache, seed: cli.seed, tolerance_scale: cli.tolerance_scale };
    let code = match cli.command {
        Command::Run { config } => {
            let s = run(&config, &opts);
            for m in &s.messages {
                eprintln!("{m}");
            }
            if let Some(dir) = &s.output_dir {
                println!("report written to {}", dir.display());
            }
            s.code
        }
        Command::Validate { config } => {
            let s = validate(&config);
            for m in &s.messages {
                if s.code == EXIT_OK {
                    println!("{m}");
                } else {
                    eprintln!("{m}");
                }
            }
            s.code
        }
        Command::Report { summary: _, dir } => match summary(&dir) {
            Ok(lines) => {
                for l in lines {
                    println!("{l}");
                }
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG_INVALID
            }
        },
    };
    ExitCode::from(code as u8)
}
