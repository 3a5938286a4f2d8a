use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use choreo::cli::{run, Command, Options};

/// Group dance tokenization, generation and evaluation pipeline.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Write a procedural group dance dataset and its manifest
    SynthData,
    /// Train the motion tokenizer on a manifest's train split
    TrainTokenizer,
    /// Turn a dataset into pretraining and fine-tuning token sequences
    Tokenize,
    /// Fit the audio token codebook
    TrainAudioCodebook,
    /// Fit an n-gram predictor on token sequences
    TrainPredictor,
    /// Generate group dances for music
    Generate,
    /// Compute metrics of generated dances against real ones
    Evaluate,
    /// Draw generated trajectories as SVG
    Plot,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::SynthData => Command::SynthData,
            Cmd::TrainTokenizer => Command::TrainTokenizer,
            Cmd::Tokenize => Command::Tokenize,
            Cmd::TrainAudioCodebook => Command::TrainAudioCodebook,
            Cmd::TrainPredictor => Command::TrainPredictor,
            Cmd::Generate => Command::Generate,
            Cmd::Evaluate => Command::Evaluate,
            Cmd::Plot => Command::Plot,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
    };
    match run(cli.command.into(), &opts) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
