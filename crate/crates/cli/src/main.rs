use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sotmlp::commands::{self, Mode};
use sotmlp::config::{Overrides, RunConfig};

/// Behavioral simulator of a single-cycle analog in-memory MLP built from
/// SOT-MRAM sigmoidal neurons and binarized synapses.
#[derive(Debug, Parser)]
#[command(name = "sotmlp", version, about)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the teacher network and save a checkpoint plus metrics log.
    Train,
    /// Evaluate a checkpoint on the test set.
    Eval {
        /// Checkpoint file to evaluate.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Forward path to evaluate through.
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
        /// Evaluate only the first N test images.
        #[arg(long, value_name = "N")]
        limit: Option<usize>,
        /// Also write the predicted label of every image, one per line.
        #[arg(long, value_name = "FILE")]
        predictions: Option<PathBuf>,
    },
    /// Run one image through a checkpoint and print the outputs.
    Infer {
        /// Checkpoint file to run.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Plain-text image file of whitespace-separated pixels in [0, 1].
        #[arg(long, value_name = "FILE", conflicts_with = "index")]
        image: Option<PathBuf>,
        /// Index into the configured test set.
        #[arg(long, value_name = "N")]
        index: Option<usize>,
        /// Forward path to run through.
        #[arg(long, value_enum, default_value_t = Mode::Ideal)]
        mode: Mode,
    },
    /// Program a checkpoint into crossbars and emit the SPICE netlist.
    ExportNetlist {
        /// Checkpoint file to program.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Output file; defaults to network.sp under the output directory.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print and save the power-area comparison and latency report.
    Report {
        /// Checkpoint whose shape the latency report should measure;
        /// defaults to the configured topology.
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::resolve(&cli.overrides) {
        Ok(cfg) => cfg,
        Err(err) => return fail(err),
    };
    let result = match &cli.command {
        Command::Train => commands::train(&cfg).map(|_| ()),
        Command::Eval { checkpoint, mode, limit, predictions } => {
            commands::eval(&cfg, checkpoint, *mode, *limit, predictions.as_deref()).map(|_| ())
        }
        Command::Infer { checkpoint, image, index, mode } => {
            commands::infer(&cfg, checkpoint, image.as_deref(), *index, *mode).map(|_| ())
        }
        Command::ExportNetlist { checkpoint, out } => {
            commands::export_netlist(&cfg, checkpoint, out.as_deref()).map(|_| ())
        }
        Command::Report { checkpoint } => commands::report(&cfg, checkpoint.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}

fn fail(err: sotmlp::error::CliError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}
