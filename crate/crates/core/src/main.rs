use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cactus::ingest::load_config;
use cactus::pipeline::{run, RunOptions};

#[derive(Parser)]
#[command(name = "cactus", version, about = "Explainable classification with flip knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a YAML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        no_correlation: bool,
        /// Skip the decision tree and correlate every column.
        #[arg(long)]
        no_preprocessing: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            no_correlation,
            no_preprocessing,
        } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let options = RunOptions {
                out_dir: out,
                jobs,
                correlation: !no_correlation,
                preprocessing: !no_preprocessing,
            };
            match run(&cfg, &options) {
                Ok(outcome) => {
                    for c in &outcome.manifest.configurations {
                        match (&c.metrics, &c.failure) {
                            (_, Some(f)) => println!("{}: failed at {:?}: {}", c.directory, f.stage, f.message),
                            (Some(m), None) => println!(
                                "{}: balanced accuracy pagerank {:.4}, probabilistic {:.4}",
                                c.directory, m.pagerank_balanced_accuracy, m.probabilistic_balanced_accuracy
                            ),
                            (None, None) => println!("{}: done", c.directory),
                        }
                    }
                    if let Some(f) = &outcome.manifest.failure {
                        eprintln!("error: {:?}: {}", f.stage, f.message);
                    }
                    println!("manifest: {}", outcome.out_dir.join("manifest.json").display());
                    if outcome.manifest.failed() {
                        ExitCode::FAILURE
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
