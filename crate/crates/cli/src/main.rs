mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ctxsal::voc::VocSplit;

#[derive(Parser, Debug)]
#[command(name = "ctxsal", version, about = "Context-aware saliency maps from images and semantic labels")]
struct Cli {
    #[command(flatten)]
    shared: SharedArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SharedArgs {
    /// Pipeline config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Context model file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,

    /// LUT bank file.
    #[arg(long, global = true)]
    pub lut_bank: Option<PathBuf>,

    /// Class-to-context mapping file.
    #[arg(long, global = true)]
    pub mapping: Option<PathBuf>,

    /// Seed for training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Also write the intermediate cue maps.
    #[arg(long, global = true)]
    pub intermediates: bool,

    #[arg(long, global = true)]
    pub no_center_prior: bool,

    #[arg(long, global = true)]
    pub no_smooth: bool,

    /// Worker threads for batch runs (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Print a JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// Which LUT to apply: the detected context's, or the bank's user LUT.
    #[arg(long, global = true, value_enum)]
    pub lut: Option<LutChoice>,

    #[arg(long, global = true)]
    pub block_size: Option<usize>,

    /// Hue filter sharpening exponent.
    #[arg(long, global = true)]
    pub color_p: Option<f64>,

    #[arg(long, global = true)]
    pub w1: Option<f64>,

    #[arg(long, global = true)]
    pub w2: Option<f64>,

    #[arg(long, global = true)]
    pub sigma_sq: Option<f64>,

    #[arg(long, global = true)]
    pub smooth_size: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutChoice {
    Auto,
    User,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the saliency map of one image.
    Saliency {
        image: PathBuf,
        labels: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train the context classifier on a VOC-layout corpus.
    TrainContext {
        root: PathBuf,
        #[arg(long, default_value = "train", value_parser = parse_split)]
        split: VocSplit,
        /// Where to write the trained model.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// Per-epoch `epoch,loss,accuracy` rows.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Held-out split to report accuracy on after training.
        #[arg(long, value_parser = parse_split)]
        test_split: Option<VocSplit>,
    },
    /// Report accuracy and the confusion matrix of a trained model.
    EvalContext {
        root: PathBuf,
        #[arg(long, default_value = "val", value_parser = parse_split)]
        split: VocSplit,
    },
    /// Run the pipeline over every image of a corpus split.
    Batch {
        root: PathBuf,
        #[arg(long, default_value = "val", value_parser = parse_split)]
        split: VocSplit,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> Result<VocSplit, String> {
    s.parse().map_err(|e: ctxsal::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let shared = &cli.shared;
    let result = match cli.command {
        Command::Saliency { image, labels, out } => commands::saliency(shared, &image, &labels, &out),
        Command::TrainContext {
            root,
            split,
            out,
            lr,
            epochs,
            batch_size,
            history,
            test_split,
        } => commands::train_context(
            shared,
            &commands::TrainArgs {
                root,
                split,
                out,
                lr,
                epochs,
                batch_size,
                history,
                test_split,
            },
        ),
        Command::EvalContext { root, split } => commands::eval_context(shared, &root, split),
        Command::Batch { root, split, out } => commands::batch(shared, &root, split, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
