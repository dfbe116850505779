use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "acsim", version, about = "Adaptive clip selection simulator")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus file.
    Corpus(CorpusArgs),
    /// Run the training-loop simulation.
    Sim(SimArgs),
    /// Run a grid of named configurations under paired seeds.
    Ablate(AblateArgs),
    /// Write the learning-rate trace of a configuration.
    LrDump(LrDumpArgs),
    /// Repeat a previous run from its manifest.
    Rerun(RerunArgs),
}

/// Layered settings: defaults, then `--config`, then flags, then `--set`.
#[derive(Debug, Args, Default)]
pub struct Layers {
    /// key = value file applied over the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` assignment; applied last, may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args, Default)]
pub struct CorpusFlags {
    #[arg(long)]
    pub videos: Option<String>,
    /// Frames per video: `N` or `MIN,MAX`.
    #[arg(long)]
    pub frames: Option<String>,
    /// Ground-truth fraction: `F` or `MIN,MAX`.
    #[arg(long = "gt-frac")]
    pub gt_frac: Option<String>,
    #[arg(long)]
    pub classes: Option<String>,
    #[arg(long = "clip-len")]
    pub clip_len: Option<String>,
    /// Sets the corpus, sampling and oracle seeds together.
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<String>,
    #[arg(long = "draws-per-video")]
    pub draws_per_video: Option<String>,
    #[arg(long = "head-frac")]
    pub head_frac: Option<String>,
    #[arg(long = "warmup-frac")]
    pub warmup_frac: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SimFlags {
    #[arg(long, value_parser = ["on", "off"])]
    pub acs: Option<String>,
    /// `sparse`, `continuous` or `continuous:<stride>`.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long, value_parser = ["1", "10"])]
    pub views: Option<String>,
    #[arg(long = "negative-mode", value_parser = ["keep", "ignore"])]
    pub negative_mode: Option<String>,
    #[arg(long = "update-weight", value_parser = ["confidence", "selection-probability"])]
    pub update_weight: Option<String>,
    #[arg(long = "p-fg")]
    pub p_fg: Option<String>,
    /// A probability or `chance`.
    #[arg(long = "p-bg")]
    pub p_bg: Option<String>,
}

impl CorpusFlags {
    pub fn assignments(&self) -> Vec<(String, String)> {
        collect(&[
            ("videos", &self.videos),
            ("frames", &self.frames),
            ("gt-frac", &self.gt_frac),
            ("classes", &self.classes),
            ("clip-len", &self.clip_len),
            ("seed", &self.seed),
        ])
    }
}

impl TrainFlags {
    pub fn assignments(&self) -> Vec<(String, String)> {
        collect(&[
            ("epochs", &self.epochs),
            ("batch-size", &self.batch_size),
            ("draws-per-video", &self.draws_per_video),
            ("head-frac", &self.head_frac),
            ("warmup-frac", &self.warmup_frac),
            ("alpha", &self.alpha),
        ])
    }
}

impl SimFlags {
    pub fn assignments(&self) -> Vec<(String, String)> {
        collect(&[
            ("acs", &self.acs),
            ("sampler", &self.sampler),
            ("views", &self.views),
            ("negative-mode", &self.negative_mode),
            ("update-weight", &self.update_weight),
            ("p-fg", &self.p_fg),
            ("p-bg", &self.p_bg),
        ])
    }
}

fn collect(pairs: &[(&str, &Option<String>)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[command(flatten)]
    pub layers: Layers,
    #[command(flatten)]
    pub corpus: CorpusFlags,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub layers: Layers,
    #[command(flatten)]
    pub corpus: CorpusFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub sim: SimFlags,
    /// Read videos from a corpus file instead of generating them.
    #[arg(long = "corpus")]
    pub corpus_file: Option<PathBuf>,
    /// Also run the uniform baseline and report the overlap gain.
    #[arg(long, value_parser = ["on", "off"], default_value = "on")]
    pub baseline: String,
    /// Write every drawn clip to draws.csv.
    #[arg(long = "log-draws")]
    pub log_draws: bool,
    /// Write checkpoint.json every K epochs.
    #[arg(long = "checkpoint-every", value_name = "K")]
    pub checkpoint_every: Option<usize>,
    /// Continue from a checkpoint; the configuration comes from the checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Grid file: shared keys, then one `[name]` section per row.
    #[arg(long)]
    pub grid: PathBuf,
    /// Number of paired seeds.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long = "first-seed", default_value_t = 0)]
    pub first_seed: u64,
    /// Assignment applied to every row after its section; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct LrDumpArgs {
    #[command(flatten)]
    pub layers: Layers,
    #[command(flatten)]
    pub corpus: CorpusFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Trace length in iterations, instead of epochs × iterations per epoch.
    #[arg(long = "total-iters")]
    pub total_iters: Option<usize>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the repeated outputs (default: the original directory).
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}
