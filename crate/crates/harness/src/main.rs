use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rltestbench_harness::commands;
use rltestbench_harness::{ExperimentConfig, Overrides, Result};

#[derive(Parser)]
#[command(name = "rltestbench", version, about = "Reinforcement-learning benchmarks for game testing and test prioritization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hunt bugs in the block maze.
    GameTest(Common),
    /// Rank test cases over a CI history.
    Prioritize(Common),
    /// Write a synthetic dataset.
    GenData(Common),
    /// Compare configurations from record files.
    Stats(Common),
    /// Export plot series from record files.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let o = Overrides { seed: self.seed, steps: self.steps, reps: self.reps, out: self.out.clone() };
        commands::load_config(&self.config, &o)
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::GameTest(c) => commands::game_test(&c.load()?),
        Command::Prioritize(c) => commands::prioritize(&c.load()?),
        Command::GenData(c) => commands::gen_data(&c.load()?),
        Command::Stats(c) => commands::stats(&c.load()?),
        Command::Report(c) => commands::report(&c.load()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
