mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pmidistill::pipeline::ExportMode;

use commands::{CliError, Session};
use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "pmidistill", version, about = "Distil a summarization dataset from a language model")]
struct Cli {
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Process at most this many new records, then stop.
    #[arg(long, global = true)]
    stage_limit: Option<u64>,
    /// Artifact store directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Plain,
    Controlled,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample candidate pairs from the teacher.
    Generate {
        #[arg(long, default_value_t = 0)]
        round: u32,
    },
    /// Score candidates with the critics.
    Filter {
        #[arg(long, default_value_t = 0)]
        round: u32,
    },
    /// Fit the next teacher on accepted pairs.
    Iterate {
        #[arg(long, default_value_t = 0)]
        round: u32,
    },
    /// Attach control attributes to accepted pairs.
    Annotate {
        #[arg(long, default_value_t = 0)]
        round: u32,
    },
    /// Pick the best of several candidate summaries per document.
    Rank {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the training export.
    Export {
        #[arg(long, value_enum, default_value_t = Mode::Plain)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        round: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics as JSON.
    Stats {
        #[arg(long, default_value_t = 0)]
        round: u32,
        /// Read records from this JSONL file instead of the store.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the synthetic news corpus.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        docs: Option<usize>,
    },
    /// Print the resolved configuration and its digest.
    Config,
}

fn run(cli: Cli) -> Result<String, CliError> {
    if let Command::SynthCorpus { out, docs } = &cli.command {
        return commands::synth_corpus(out, *docs, cli.seed);
    }
    let path = cli.config.as_deref().ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let ov = Overrides { seed: cli.seed, workers: cli.workers, store: cli.store.clone() };
    let env = |k: &str| std::env::var(k).ok();
    let cfg = RunConfig::load(Some(path), &env, &ov).map_err(|e| CliError::Validation(e.to_string()))?;
    if matches!(cli.command, Command::Config) {
        return Ok(format!("{}# digest {}", cfg.render(), cfg.digest()));
    }
    if cli.stage_limit == Some(0) {
        return Err(CliError::Validation("--stage-limit must be at least 1".into()));
    }
    let mut s = Session::new(cfg, cli.stage_limit);
    match cli.command {
        Command::Generate { round } => s.generate(round),
        Command::Filter { round } => s.filter(round),
        Command::Iterate { round } => s.iterate(round),
        Command::Annotate { round } => s.annotate(round),
        Command::Rank { input, output } => s.rank(&input, output),
        Command::Export { mode, round, out } => {
            let mode = match mode {
                Mode::Plain => ExportMode::Plain,
                Mode::Controlled => ExportMode::Controlled,
            };
            s.export(round, mode, out)
        }
        Command::Stats { round, input, output } => {
            let report = s.stats_report(round, input)?;
            match output {
                Some(p) => {
                    std::fs::write(&p, format!("{report}\n"))?;
                    Ok(format!("{}: written", p.display()))
                }
                None => Ok(report),
            }
        }
        Command::SynthCorpus { .. } | Command::Config => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
