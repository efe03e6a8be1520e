use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qrobust::experiment::{
    attack_to_dir, gen_data, lipschitz_to_dir, report_to_dir, train_to_dir, transfer_to_dir, ExperimentConfig,
};
use qrobust::Error;

#[derive(Parser)]
#[command(name = "qrobust", version, about = "Train, attack and certify quantum and classical image classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the train and test splits to QADS files.
    GenData(Common),
    /// Train the configured model for every seed and write checkpoints.
    Train(Common),
    /// Self-attack sweep over the configured budgets, with δ heatmaps.
    Attack(Common),
    /// Source × target accuracy grid under transferred attacks.
    Transfer(Common),
    /// Certified and empirical Lipschitz bounds per checkpoint.
    Lipschitz(Common),
    /// Run the whole study and write every table.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> qrobust::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn dispatch(command: &Command) -> qrobust::Result<Vec<PathBuf>> {
    let (common, run): (&Common, fn(&ExperimentConfig, &Path) -> qrobust::Result<Vec<PathBuf>>) = match command {
        Command::GenData(c) => (c, gen_data),
        Command::Train(c) => (c, train_to_dir),
        Command::Attack(c) => (c, attack_to_dir),
        Command::Transfer(c) => (c, |cfg, out| transfer_to_dir(cfg, out).map(|p| vec![p])),
        Command::Lipschitz(c) => (c, |cfg, out| lipschitz_to_dir(cfg, out).map(|p| vec![p])),
        Command::Report(c) => (c, report_to_dir),
    };
    let cfg = common.load()?;
    run(&cfg, &common.out)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Numeric(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli.command).context("qrobust failed") {
        Ok(paths) => {
            print_paths(&paths);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, exit_code);
            ExitCode::from(code)
        }
    }
}
