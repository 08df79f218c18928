//! Command-line front end and review service for the mathtag pipeline.

pub mod commands;
pub mod config;
pub mod server;

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::PipelineConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("service: {0}")]
    Service(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 3,
            CliError::Service(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mathtag", version, about = "Keyphrase extraction and classification for mathematical abstracts")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Diagonal {
    NoSecondary,
    NoOtherClass,
}

#[derive(Debug, Args)]
pub struct Io {
    /// Input file; standard input when absent.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractionOverrides {
    #[arg(long)]
    pub max_phrases: Option<usize>,
    #[arg(long)]
    pub min_phrases: Option<usize>,
    #[arg(long)]
    pub similarity_threshold: Option<f64>,
    /// Vocabulary store directory.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifierOverrides {
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub balance_classes: bool,
    /// Decision value a class must exceed to be assigned.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tag raw text, one record per line, or a JSON-lines corpus.
    Tag {
        #[command(flatten)]
        io: Io,
        /// Read a JSON-lines corpus instead of raw text lines.
        #[arg(long)]
        corpus: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        tagger_dir: Option<PathBuf>,
    },
    /// Extract ranked keyphrase candidates from a JSON-lines corpus.
    Extract {
        #[command(flatten)]
        io: Io,
        /// Tagged documents written by `tag --format json`.
        #[arg(long)]
        tagged: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        overrides: ExtractionOverrides,
    },
    /// Train one classifier per primary class of a corpus.
    Train {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[command(flatten)]
        classifier: ClassifierOverrides,
    },
    /// Assign classes to the documents of a corpus.
    Classify {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        classifier: ClassifierOverrides,
    },
    /// Per-class precision, recall and F1 against primary codes.
    Evaluate {
        #[command(flatten)]
        io: Io,
        /// Predictions written by `classify`; classify the input when absent.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        classifier: ClassifierOverrides,
    },
    /// Primary/secondary class overlap matrix as `.pgm` and `.tsv`.
    Overlap {
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// Output path prefix; `.pgm` and `.tsv` are appended.
        #[arg(long)]
        prefix: PathBuf,
        #[arg(long, value_enum, default_value = "no-secondary")]
        diagonal: Diagonal,
    },
    /// Serve the review API and UI.
    Serve {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
    },
}

/// Runs a command line against the given streams and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = write!(stderr, "{e}");
            return 2;
        }
        Err(e) => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match commands::dispatch(cli, stdin, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
