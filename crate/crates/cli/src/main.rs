//! `acsim` command-line driver.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 2    | invalid arguments or configuration |
//! | 3    | runtime or I/O failure |

mod args;
mod jobs;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::process::ExitCode;

use acsim::config;
use acsim::sim::{Checkpoint, SimConfig};
use clap::Parser;

use args::{AblateArgs, Cli, Command, CorpusArgs, Layers, LrDumpArgs, RerunArgs, SimArgs};
use jobs::{Job, Manifest};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Runtime(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<acsim::Error> for Failure {
    fn from(e: acsim::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(Failure::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Corpus(a) => corpus(a),
        Command::Sim(a) => sim(a),
        Command::Ablate(a) => ablate(a),
        Command::LrDump(a) => lr_dump(a),
        Command::Rerun(a) => rerun(a),
    }
}

fn parse_sets(sets: &[String]) -> Result<Vec<(String, String)>, Failure> {
    sets.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got {s:?}")))
        })
        .collect()
}

/// Defaults, then the config file, then flag assignments, then `--set`.
fn layered(layers: &Layers, flags: Vec<(String, String)>) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &layers.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        config::apply_all(&mut cfg, &config::parse(&text)?)?;
    }
    config::apply_all(&mut cfg, &flags)?;
    config::apply_all(&mut cfg, &parse_sets(&layers.set)?)?;
    Ok(cfg)
}

fn corpus(a: CorpusArgs) -> Result<(), Failure> {
    let cfg = layered(&a.layers, a.corpus.assignments())?;
    cfg.corpus.validate()?;
    jobs::run_job(Job::Corpus { corpus: cfg.corpus }, &a.out_dir)
}

fn absolute(path: &Path) -> Result<std::path::PathBuf, Failure> {
    fs::canonicalize(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn sim(a: SimArgs) -> Result<(), Failure> {
    let flags: Vec<_> =
        [a.corpus.assignments(), a.train.assignments(), a.sim.assignments()].concat();
    let config = match &a.resume {
        Some(path) => {
            if !flags.is_empty() || a.layers.config.is_some() || !a.layers.set.is_empty() {
                return Err(Failure::Config("--resume takes its configuration from the checkpoint".into()));
            }
            let file = File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Checkpoint::read(BufReader::new(file))?.config
        }
        None => layered(&a.layers, flags)?,
    };
    config.validate()?;
    if a.checkpoint_every == Some(0) {
        return Err(Failure::Config("--checkpoint-every must be at least 1".into()));
    }
    let job = Job::Sim {
        config: config.resolved(),
        corpus_file: a.corpus_file.as_deref().map(absolute).transpose()?,
        baseline: a.baseline == "on",
        log_draws: a.log_draws,
        checkpoint_every: a.checkpoint_every,
        resume: a.resume.as_deref().map(absolute).transpose()?,
    };
    jobs::run_job(job, &a.out_dir)
}

fn ablate(a: AblateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.grid).map_err(|e| Failure::Config(format!("{}: {e}", a.grid.display())))?;
    let sets = parse_sets(&a.set)?;
    let grid = config::parse_grid(&text)?
        .into_iter()
        .map(|(name, kvs)| {
            let mut cfg = SimConfig::default();
            config::apply_all(&mut cfg, &kvs)?;
            config::apply_all(&mut cfg, &sets)?;
            cfg.validate()?;
            Ok((name, cfg.resolved()))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    if a.seeds == 0 {
        return Err(Failure::Config("--seeds must be at least 1".into()));
    }
    let seeds = (a.first_seed..a.first_seed + a.seeds).collect();
    jobs::run_job(Job::Ablate { grid, seeds }, &a.out_dir)
}

fn lr_dump(a: LrDumpArgs) -> Result<(), Failure> {
    let cfg = layered(&a.layers, [a.corpus.assignments(), a.train.assignments()].concat())?;
    if cfg.epochs == 0 {
        return Err(Failure::Config("epochs must be at least 1".into()));
    }
    let plan = match a.total_iters {
        Some(0) => return Err(Failure::Config("--total-iters must be at least 1".into())),
        Some(total) => {
            let mut plan = acsim::SchedulePlan::from_total(total, cfg.head_fraction, cfg.warmup_fraction);
            plan.alpha = cfg.alpha;
            plan
        }
        None => cfg.schedule_plan(),
    };
    plan.validate()?;
    jobs::run_job(Job::LrDump { plan }, &a.out_dir)
}

fn rerun(a: RerunArgs) -> Result<(), Failure> {
    let manifest = Manifest::read(&a.manifest)?;
    let out_dir = a.out_dir.unwrap_or(manifest.out_dir);
    jobs::run_job(manifest.job, &out_dir)
}
