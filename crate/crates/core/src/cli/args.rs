use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "pmstfa", version, about = "Parsimonious mixtures of skew-t factor analyzers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a labelled sample from a skew-t factor mixture.
    Simulate(SimulateArgs),
    /// Fit a grid of models and keep the one with the highest BIC.
    Fit(FitArgs),
    /// Compare predicted and true labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Built-in parameter set (sim13).
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON file with the simulation parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Overrides the seed of the preset or parameter file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated feature columns; default is every column except the label.
    #[arg(long)]
    pub columns: Option<String>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub g_min: usize,
    #[arg(long, default_value_t = 4)]
    pub g_max: usize,
    #[arg(long, default_value_t = 1)]
    pub q_min: usize,
    #[arg(long, default_value_t = 1)]
    pub q_max: usize,
    /// Comma list of model identifiers (CCC, ..., UUU) or `all`.
    #[arg(long, default_value = "all")]
    pub models: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub aitken_tol: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// CSV with predicted labels (for example classification.csv).
    #[arg(long)]
    pub predicted: PathBuf,
    /// CSV with the true labels.
    #[arg(long)]
    pub truth: PathBuf,
    /// Column of the predicted file; default `label`, else the first column.
    #[arg(long)]
    pub predicted_column: Option<String>,
    /// Column of the truth file; default `label`, else the first column.
    #[arg(long)]
    pub truth_column: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
