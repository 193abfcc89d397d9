//! Command-line surface. Path fields are excluded from serialization so the
//! config hash depends on parameters only.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lsem_core::Space;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lsem", version, about = "Linear latent-space semantics toolkit")]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw standard Gaussian latent codes into an LSDF file.
    Sample(SampleArgs),
    /// Score latent codes with a synthetic linear oracle.
    OracleScore(OracleScoreArgs),
    /// Train a boundary for one attribute from codes and scores.
    Train(TrainArgs),
    /// Re-evaluate a boundary on scored codes.
    Eval(EvalArgs),
    /// Move codes along a boundary normal.
    Edit(EditArgs),
    /// Project a boundary so that the given conditions stay fixed.
    Project(ProjectArgs),
    /// Mean score change of every attribute after editing along each boundary.
    Rescore(RescoreArgs),
    /// Correlation between score columns or between boundary normals.
    Correlate(CorrelateArgs),
    /// Self-score change per layer group for layered codes.
    Layerwise(LayerwiseArgs),
    /// Identity feature discrepancy across edit strengths.
    Identity(IdentityArgs),
    /// Monte-Carlo concentration checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Summarize report JSON files.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum SpaceArg {
    #[value(name = "Z", alias = "z")]
    Z,
    #[value(name = "W", alias = "w")]
    W,
    #[value(name = "WPlus", alias = "wplus", alias = "W+")]
    WPlus,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Z => Space::Z,
            SpaceArg::W => Space::W,
            SpaceArg::WPlus => Space::WPlus,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "Z")]
    pub space: SpaceArg,
    /// Layers per code for WPlus.
    #[arg(long, default_value_t = 18)]
    pub layers: usize,
    #[arg(long, default_value_t = lsem_core::rng::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleScoreArgs {
    /// Model description JSON.
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    /// Seed for score noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Directory receiving one ground-truth boundary JSON per attribute.
    #[arg(long)]
    #[serde(skip)]
    pub emit_truth: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.02)]
    pub candidate_fraction: f64,
    #[arg(long, default_value_t = 0.3)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Score threshold labelling the non-candidate samples.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub scores: PathBuf,
    #[arg(long)]
    pub attribute: String,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Hinge-loss weight C.
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    pub regularization: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long)]
    pub fit_bias: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Also write the accuracy report envelope here.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    #[serde(skip)]
    pub boundary: PathBuf,
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub scores: PathBuf,
    /// Score column to evaluate against (default: the boundary's attribute).
    #[arg(long)]
    pub attribute: Option<String>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Ground-truth boundary to report the cosine against.
    #[arg(long)]
    #[serde(skip)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EditArgs {
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub boundary: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Boundaries to hold fixed, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip)]
    pub conditions: Vec<PathBuf>,
    /// Layers to edit for WPlus codes, e.g. `0-1,8-17`.
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    #[serde(skip)]
    pub boundary: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    #[serde(skip)]
    pub conditions: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RescoreArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    /// Boundaries to edit along (default: the model's true boundaries).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip)]
    pub boundaries: Vec<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Pass scores through a logistic sigmoid before differencing.
    #[arg(long)]
    pub sigmoid: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(long, conflicts_with = "boundaries", required_unless_present = "boundaries")]
    #[serde(skip)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip)]
    pub boundaries: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LayerwiseArgs {
    /// Model description JSON with `layer_groups`.
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip)]
    pub boundaries: Vec<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentityArgs {
    #[arg(long = "in")]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub boundary: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0.5,1,2")]
    pub alphas: Vec<f64>,
    /// Seed of the mock feature extractor.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = lsem_core::rng::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCommand {
    /// P(|nᵀz| > threshold) against the exact normal tail.
    Tail {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
    },
    /// Projection concentration against its c-free bound.
    Property2 {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        alpha: f64,
    },
    /// Norm concentration in [√d − β, √d + β].
    Annulus {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        beta: f64,
    },
    /// Unit-sphere cap mass |x₁| ≤ α/√(d−2).
    SphereCap {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        alpha: f64,
    },
    /// Kolmogorov-Smirnov distance of nᵀz from N(0, 1).
    Ks {
        #[command(flatten)]
        mc: McArgs,
    },
}

impl VerifyCommand {
    pub fn mc(&self) -> &McArgs {
        match self {
            VerifyCommand::Tail { mc, .. }
            | VerifyCommand::Property2 { mc, .. }
            | VerifyCommand::Annulus { mc, .. }
            | VerifyCommand::SphereCap { mc, .. }
            | VerifyCommand::Ks { mc } => mc,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Also write every value as long-format CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
