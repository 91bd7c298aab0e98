use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ramanmag::{
    default_workers, parse_config, preset, preset_json, run, verify, ExperimentConfig, SweepError,
};

#[derive(Parser)]
#[command(
    name = "ramanmag",
    version,
    about = "Raman laser threshold magnetometry sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (overrides `workers`).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a built-in figure preset.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(ramanmag::PRESET_NAMES))]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Print the preset config and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Re-run a config and compare with a baseline CSV.
    Verify {
        config: PathBuf,
        baseline: PathBuf,
        #[arg(long, default_value_t = ramanmag::DEFAULT_RTOL)]
        rtol: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, SweepError> {
    let text = std::fs::read_to_string(path).map_err(|source| SweepError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn workers(cli: Option<usize>, cfg: &ExperimentConfig) -> Result<usize, SweepError> {
    match cli.or(cfg.workers) {
        Some(0) => Err(SweepError::Validation {
            field: "workers".into(),
            message: "must be at least 1".into(),
        }),
        Some(n) => Ok(n),
        None => Ok(default_workers()),
    }
}

fn execute(
    cfg: &ExperimentConfig,
    out: Option<PathBuf>,
    n: Option<usize>,
) -> Result<ExitCode, SweepError> {
    let dir = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = run(cfg, &dir, workers(n, cfg)?)?;
    let m = &result.manifest;
    let skipped = m
        .tasks
        .iter()
        .filter(|t| t.status == ramanmag::TaskState::Skipped)
        .count();
    eprintln!(
        "{} tasks ({} failed, {} skipped) in {:.2} s on {} workers",
        m.tasks.len(),
        m.failed(),
        skipped,
        m.wall_time_s,
        m.workers
    );
    for t in m
        .tasks
        .iter()
        .filter(|t| t.status == ramanmag::TaskState::Failed)
    {
        eprintln!("failed: {}: {}", t.task, t.message.as_deref().unwrap_or(""));
    }
    println!("{}", result.csv.display());
    println!("{}", result.summary.display());
    println!("{}", result.manifest_path.display());
    Ok(if m.failed() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn main_inner(cli: Cli) -> Result<ExitCode, SweepError> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
        } => execute(&load(&config)?, out, workers),
        Command::Preset {
            name,
            out,
            workers,
            print_config,
        } => {
            if print_config {
                println!("{}", preset_json(&name)?);
                return Ok(ExitCode::SUCCESS);
            }
            execute(&preset(&name)?, out, workers)
        }
        Command::Verify {
            config,
            baseline,
            rtol,
            workers: n,
        } => {
            let cfg = load(&config)?;
            let report = verify(&cfg, &baseline, rtol, workers(n, &cfg)?)?;
            println!("{report}");
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
