//! Command-line surface. Every command's arguments serialize to the
//! resolved-config snapshot written next to its outputs.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use wbp_core::training::{AdamConfig, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "wbp", version, about = "Train, prune and evaluate weighted belief-propagation decoders")]
pub struct Cli {
    /// Worker threads for frame-parallel work; results do not depend on it
    #[arg(long, global = true, env = "WBP_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "kebab-case")]
pub enum Command {
    /// Write an (overcomplete) parity-check matrix and its code description
    GenCode(GenCodeArgs),
    /// Train the weights of a decoder
    Train(TrainArgs),
    /// Alternate training and check-node pruning down to a budget
    Prune(PruneArgs),
    /// Monte-Carlo BLER/BER of a decoder variant
    Eval(EvalArgs),
    /// Monte-Carlo BLER/BER of the brute-force ML or bitwise MAP decoder
    Oracle(OracleArgs),
    /// CN-evaluation counts and per-iteration CN fractions
    Report(ReportArgs),
    /// Re-run a command from a resolved-config snapshot
    #[serde(skip)]
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenCodeArgs {
    /// Output directory
    #[arg(long, global = true, default_value = "wbp-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub family: Family,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// All minimum-weight parity checks of RM(r, m)
    Rm {
        r: usize,
        m: usize,
        /// Keep a random subset of this many rows
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A parity-check matrix read from an alist file
    Alist { path: PathBuf },
    /// Random low-weight dual codewords of a base code
    RandomOc {
        /// Base parity-check matrix (alist)
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 16)]
        weight_cap: usize,
        /// Base rows combined per candidate at most
        #[arg(long, default_value_t = 4)]
        max_combine: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The CCSDS (128,64) telecommand LDPC code
    Ccsds,
}

/// Training hyperparameters shared by `train`, `prune` and `eval --variant d3`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainOpts {
    /// Frames per optimizer step
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    /// Lower end of the training Eb/N0 range (dB)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub ebn0_min: f64,
    /// Upper end of the training Eb/N0 range (dB)
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub ebn0_max: f64,
    /// Adam step size
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Multiloss schedule as `epoch_fraction:eta` pairs
    #[arg(long, default_value = "0:1,0.5:0.5,0.75:0")]
    pub eta_schedule: String,
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub steps_per_epoch: usize,
    /// Frames in the fixed validation set
    #[arg(long, default_value_t = 2048)]
    pub validation_size: usize,
    /// Convergence window (epochs)
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Relative improvement below which training stops
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Decoupled decay of the CN weights per optimizer step
    #[arg(long, default_value_t = 0.0)]
    pub cn_weight_decay: f64,
}

pub fn parse_eta_schedule(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| {
            let (f, e) = pair.split_once(':').with_context(|| format!("eta schedule entry {pair:?} is not `fraction:eta`"))?;
            Ok((f.trim().parse()?, e.trim().parse()?))
        })
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("invalid eta schedule {s:?}"))
}

impl TrainOpts {
    pub fn to_config(&self, seed: u64) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            batch_size: self.batch_size,
            ebn0_range: (self.ebn0_min, self.ebn0_max),
            adam: AdamConfig { learning_rate: self.learning_rate, ..Default::default() },
            eta_schedule: parse_eta_schedule(&self.eta_schedule)?,
            max_epochs: self.max_epochs,
            steps_per_epoch: self.steps_per_epoch,
            validation_size: self.validation_size,
            window: self.window,
            tolerance: self.tolerance,
            cn_weight_decay: self.cn_weight_decay,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Where the initial decoder comes from.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelSource {
    /// Code directory written by `gen-code`; the overcomplete matrix is
    /// used in every iteration
    #[arg(long, conflicts_with = "model")]
    pub code: Option<PathBuf>,
    /// Start from a model bundle instead
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Decoding iterations (with --code)
    #[arg(long, default_value_t = 6)]
    pub iterations: usize,
    /// Weight mode with --code: cn-tied, untied or plain
    #[arg(long, default_value = "cn-tied")]
    pub weight_mode: String,
    /// LLR clamp with --code
    #[arg(long, default_value_t = 20.0)]
    pub clamp: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "wbp-out")]
    pub out: PathBuf,
    /// JSON config or snapshot supplying defaults for flags not given
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PruneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: ModelSource,
    /// Target number of CN evaluations
    #[arg(long, required_unless_present = "config")]
    pub budget: Option<usize>,
    /// CNs removed per cycle
    #[arg(long, default_value_t = 1)]
    pub per_cycle: usize,
    /// Remove at least this fraction of the remaining CNs per cycle
    #[arg(long)]
    pub per_cycle_fraction: Option<f64>,
    /// Divergence factor over the best validation loss
    #[arg(long, default_value_t = 1.1)]
    pub tau: f64,
    /// Consecutive diverging cycles before stopping
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    /// Target selection: magnitude or random
    #[arg(long, default_value = "magnitude")]
    pub mode: String,
    /// Epoch cap of the retraining phases (default: --max-epochs)
    #[arg(long)]
    pub retrain_max_epochs: Option<usize>,
    /// Allow iterations to lose all their CNs
    #[arg(long)]
    pub allow_empty: bool,
    /// Write a model bundle every this many cycles
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "wbp-out")]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Monte-Carlo settings.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimOpts {
    /// Eb/N0 points in dB, comma separated
    #[arg(long, value_delimiter = ',', required_unless_present = "config", allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    /// Stop a point after this many block errors
    #[arg(long, default_value_t = 200)]
    pub min_errors: u64,
    /// Stop a point after this many frames
    #[arg(long, default_value_t = 10_000_000)]
    pub max_frames: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Model bundle (never modified)
    #[arg(long, required_unless_present = "config")]
    pub model: Option<PathBuf>,
    /// d1: as trained; d2: all weights one; d3: untied and retrained
    #[arg(long, default_value = "d1")]
    pub variant: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimOpts,
    /// Training settings for d3
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "wbp-out")]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    /// Code directory written by `gen-code`
    #[arg(long, conflicts_with = "model")]
    pub code: Option<PathBuf>,
    /// Take the code from a model bundle
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// ml (block-wise) or map (bit-wise)
    #[arg(long, default_value = "ml")]
    pub decoder: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "wbp-out")]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Model bundles to account for (repeatable)
    #[arg(long)]
    pub model: Vec<PathBuf>,
    /// Conventional BP on a matrix as `PATH:ITERATIONS`, where PATH is an
    /// alist file or a code directory (repeatable)
    #[arg(long)]
    pub bp: Vec<String>,
    #[arg(long, default_value = "wbp-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Snapshot written by an earlier run
    pub snapshot: PathBuf,
    /// Write outputs here instead of the recorded directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenCode(_) => "gen-code",
            Command::Train(_) => "train",
            Command::Prune(_) => "prune",
            Command::Eval(_) => "eval",
            Command::Oracle(_) => "oracle",
            Command::Report(_) => "report",
            Command::Rerun(_) => "rerun",
        }
    }

    pub fn out_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            Command::GenCode(a) => Some(&mut a.out),
            Command::Train(a) => Some(&mut a.out),
            Command::Prune(a) => Some(&mut a.out),
            Command::Eval(a) => Some(&mut a.out),
            Command::Oracle(a) => Some(&mut a.out),
            Command::Report(a) => Some(&mut a.out),
            Command::Rerun(_) => None,
        }
    }
}

/// Fails with a validation message naming the missing flag.
pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    match v {
        Some(x) => Ok(x.clone()),
        None => bail!("missing required setting --{flag}"),
    }
}
