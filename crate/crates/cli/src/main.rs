//! `spinrc`: run spintronic reservoir experiments from JSON configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinrc::experiment::{self, ExperimentConfig, MnistConfig, TaskKind};
use spinrc::experiment::config::Seeds;
use spinrc::Error;

/// Directory searched for MNIST IDX files when no config is given.
const MNIST_DIR_ENV: &str = "SPINRC_MNIST_DIR";

#[derive(Parser)]
#[command(name = "spinrc", version, about = "Spintronic reservoir computing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dense single-node trace for a scripted pulse train.
    Simulate(Common),
    /// Train and evaluate one benchmark.
    Run {
        #[arg(value_enum)]
        task: RunTask,
        #[command(flatten)]
        common: Common,
    },
    /// MNIST accuracy over a grid of pulse amplitudes and widths.
    Sweep(Common),
    /// Write a seeded dataset to disk.
    GenData(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum RunTask {
    Mnist,
    #[value(name = "second_order", alias = "second-order")]
    SecondOrder,
    Narma10,
}

impl RunTask {
    fn kind(self) -> TaskKind {
        match self {
            RunTask::Mnist => TaskKind::Mnist,
            RunTask::SecondOrder => TaskKind::SecondOrder,
            RunTask::Narma10 => TaskKind::Narma10,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sets the data and training seeds to N and the test seed to N + 1000.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    parallelism: Option<usize>,
    /// MSM pulse amplitude (µA).
    #[arg(long, allow_negative_numbers = true)]
    amp: Option<f64>,
    /// MSM pulse width (ns).
    #[arg(long, allow_negative_numbers = true)]
    width: Option<f64>,
}

impl Common {
    fn load(&self, task: Option<TaskKind>) -> Result<ExperimentConfig, Error> {
        let mut cfg = match (&self.config, task) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(task)) => builtin(task),
            (None, None) => return Err(Error::Config(vec!["--config is required for this command".into()])),
        };
        if let Some(task) = task {
            cfg.task = task;
            if task == TaskKind::Mnist && cfg.mnist.is_none() {
                cfg.mnist = Some(MnistConfig::from_dir(&mnist_dir()));
            }
        }
        if let Some(n) = self.seed {
            cfg.seeds = Seeds {
                data: n,
                train: n,
                test: n.wrapping_add(1000),
            };
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p;
        }
        if let Some(a) = self.amp {
            cfg.operating_point.amp = a;
        }
        if let Some(w) = self.width {
            cfg.operating_point.width = w;
        }
        Ok(cfg)
    }
}

fn mnist_dir() -> PathBuf {
    std::env::var_os(MNIST_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("data").join("mnist"))
}

fn builtin(task: TaskKind) -> ExperimentConfig {
    ExperimentConfig::new(task, Seeds::BUILTIN)
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(c) => {
            let mut cfg = c.load(None)?;
            cfg.task = TaskKind::Simulate;
            list(&experiment::simulate_node(&cfg)?);
        }
        Command::Run { task, common } => {
            let cfg = common.load(Some(task.kind()))?;
            let out = experiment::run_experiment(&cfg)?;
            println!("{}", serde_json::to_string(&out.report)?);
        }
        Command::Sweep(c) => {
            let mut cfg = c.load(None)?;
            cfg.task = TaskKind::Sweep;
            let (cells, files) = experiment::run_sweep(&cfg)?;
            for cell in &cells {
                match &cell.error {
                    None => eprintln!("amp {} width {}: {:.4}", cell.amp, cell.width, cell.test_accuracy),
                    Some(e) => eprintln!("amp {} width {}: failed: {e}", cell.amp, cell.width),
                }
            }
            list(&files);
        }
        Command::GenData(c) => {
            let cfg = c.load(None)?;
            list(&experiment::gen_data(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let msg = e.to_string().replace('\n', "; ");
            eprintln!("error kind={} exit={}: {msg}", kind.as_str(), kind.exit_code());
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
