mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;

use commands::{Failure, Output};
use config::{Command, RunConfig};
use output::write_atomic;

#[derive(Parser, Debug)]
#[command(
    name = "noisy-qst",
    version,
    about = "Tomography measurement design under noisy entangling gates"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted. `optimize` writes `<out>.json` and `<out>.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run the command stored in a JSON config instead of one given by flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    match (&cli.config, &cli.command) {
        (Some(path), None) => {
            if cli.seed.is_some() {
                return Err(Failure::Usage(anyhow!("--seed cannot be combined with --config")));
            }
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Usage)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(Failure::Usage)
        }
        (None, Some(cmd)) => Ok(RunConfig {
            seed: cli.seed.unwrap_or(0),
            command: cmd.clone(),
        }),
        (Some(_), Some(_)) => Err(Failure::Usage(anyhow!(
            "give either a subcommand or --config, not both"
        ))),
        (None, None) => Err(Failure::Usage(anyhow!("no subcommand given (see --help)"))),
    }
}

fn emit(cli: &Cli, out: Output) -> Result<(), Failure> {
    let io = |e: std::io::Error, p: &PathBuf| Failure::Runtime(anyhow!("writing {}: {e}", p.display()));
    match &cli.out {
        None => print!("{}", out.brief.as_deref().unwrap_or(&out.document)),
        Some(path) => match &out.csv {
            Some(csv) => {
                let json_path = path.with_extension("json");
                let csv_path = path.with_extension("csv");
                write_atomic(&json_path, &out.document).map_err(|e| io(e, &json_path))?;
                write_atomic(&csv_path, csv).map_err(|e| io(e, &csv_path))?;
            }
            None => {
                write_atomic(path, &out.document).map_err(|e| io(e, path))?;
                if let Some(b) = &out.brief {
                    print!("{b}");
                }
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = resolve(&cli)
        .and_then(|cfg| commands::run(&cfg))
        .and_then(|out| emit(&cli, out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
