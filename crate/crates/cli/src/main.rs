//! `aignet` command-line driver.

mod commands;
mod settings;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use aignet::error::{AigError, ModelError, TrainError};
use aignet::sim::LabelReadError;
use clap::{Parser, Subcommand};

use settings::SettingsArgs;

#[derive(Debug, Parser)]
#[command(name = "aignet", version, about = "And-Inverter Graph learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rewrite an AIGER file, format chosen by the output extension
    Convert {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate random combinational AIGs
    Gen {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        pis: usize,
        #[arg(long)]
        ands: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability of inverting each AND fanin
        #[arg(long, default_value_t = 0.5)]
        not_prob: f64,
        /// aag or aig
        #[arg(long, default_value = "aag")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate circuits and write per-node labels
    Label {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Train a model and report test metrics
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Label file; computed on the fly when absent
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Run name in reports (defaults to the model variant)
        #[arg(long)]
        run: Option<String>,
        /// Leave wall-clock figures out of stdout and metrics
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Evaluate a checkpoint
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Evaluate every circuit instead of the test split
        #[arg(long)]
        all: bool,
        #[arg(long)]
        run: Option<String>,
        /// Metrics file to write
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Tabulate metrics files
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// spp or ttdp
        #[arg(long, default_value = "spp")]
        task: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::InvalidData {
            CliError::Usage(format!("{}: {e}", path.display()))
        } else {
            CliError::Io(format!("{}: {e}", path.display()))
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<AigError> for CliError {
    fn from(e: AigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io(io) if io.kind() != std::io::ErrorKind::InvalidData => CliError::Io(io.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Model(m) => m.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LabelReadError> for CliError {
    fn from(e: LabelReadError) -> Self {
        match e {
            LabelReadError::Io(io) => CliError::Io(io.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Convert { input, out: dst } => commands::convert(&input, &dst, out),
        Command::Gen { count, pis, ands, seed, not_prob, format, out: dir } => {
            commands::gen(&commands::GenArgs { count, pis, ands, seed, not_prob, format }, &dir, out)
        }
        Command::Label { data, out: dst, settings } => commands::label(&commands::prepare(&settings)?, &data, &dst, out),
        Command::Train { data, labels, out: dir, run, no_timing, settings } => {
            commands::train(&commands::prepare(&settings)?, &data, labels.as_deref(), &dir, run, no_timing, out)
        }
        Command::Eval { data, labels, checkpoint, all, run, out: dst, settings } => {
            commands::eval(&commands::prepare(&settings)?, &data, labels.as_deref(), &checkpoint, all, run, dst.as_deref(), out)
        }
        Command::Report { files, task } => commands::report(&files, &task, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock).and_then(|()| lock.flush().map_err(|e| CliError::Io(e.to_string()))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
