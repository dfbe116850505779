//! Resolved jobs, their manifests, and execution.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use acsim::corpus::{self, CorpusConfig};
use acsim::schedule::SchedulePlan;
use acsim::sim::{self, Checkpoint, EvalResult, SimConfig, SimSummary, Simulator};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to repeat a run. Stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Corpus {
        corpus: CorpusConfig,
    },
    Sim {
        config: SimConfig,
        corpus_file: Option<PathBuf>,
        baseline: bool,
        log_draws: bool,
        checkpoint_every: Option<usize>,
        resume: Option<PathBuf>,
    },
    Ablate {
        grid: Vec<(String, SimConfig)>,
        seeds: Vec<u64>,
    },
    LrDump {
        plan: SchedulePlan,
    },
}

impl Job {
    pub fn seed(&self) -> u64 {
        match self {
            Job::Corpus { corpus } => corpus.seed,
            Job::Sim { config, .. } => config.seed,
            Job::Ablate { seeds, .. } => seeds.first().copied().unwrap_or(0),
            Job::LrDump { .. } => 0,
        }
    }

    /// Output files, relative to the output directory.
    pub fn outputs(&self) -> Vec<String> {
        let mut out: Vec<&str> = match self {
            Job::Corpus { .. } => vec!["corpus.txt"],
            Job::Sim { config, baseline, log_draws, checkpoint_every, .. } => {
                let mut v = vec!["report.csv", "summary.json"];
                if *baseline && config.use_acs {
                    v.push("baseline_report.csv");
                }
                if *log_draws {
                    v.push("draws.csv");
                }
                if checkpoint_every.is_some() {
                    v.push("checkpoint.json");
                }
                v
            }
            Job::Ablate { .. } => vec!["ablation.csv"],
            Job::LrDump { .. } => vec!["lr.csv"],
        };
        out.sort_unstable();
        out.into_iter().map(String::from).collect()
    }

    /// Flat key = value form of the configuration, when there is one.
    fn config_text(&self) -> Option<String> {
        match self {
            Job::Sim { config, .. } => Some(acsim::config::to_text(config)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_secs: u64,
    /// Filled in once the run finishes.
    pub elapsed_secs: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub job: Job,
    pub config_text: Option<String>,
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    pub wall_clock: WallClock,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let file = File::open(path).map_err(|e| Failure::io(path, e))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    fn write(&self) -> Result<(), Failure> {
        let path = self.out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Failure::Runtime(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Failure::io(&path, e))
    }
}

/// Writes the manifest, runs the job, then records the elapsed time.
pub fn run_job(job: Job, out_dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut manifest = Manifest {
        tool: "acsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: job.seed(),
        config_text: job.config_text(),
        outputs: job.outputs(),
        out_dir: out_dir.to_path_buf(),
        job,
        wall_clock: WallClock { started_unix_secs: started, elapsed_secs: None },
    };
    manifest.write()?;
    let clock = Instant::now();
    execute(&manifest.job, out_dir)?;
    manifest.wall_clock.elapsed_secs = Some(clock.elapsed().as_secs_f64());
    manifest.write()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| Failure::io(&path, e))
}

fn finish(mut w: BufWriter<File>) -> Result<(), Failure> {
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))
}

fn execute(job: &Job, out: &Path) -> Result<(), Failure> {
    match job {
        Job::Corpus { corpus } => {
            let videos = corpus::generate_corpus(corpus)?;
            let mut w = create(out, "corpus.txt")?;
            corpus::write_corpus(&mut w, &videos)?;
            finish(w)
        }
        Job::Sim { config, corpus_file, baseline, log_draws, checkpoint_every, resume } => {
            run_sim(config, corpus_file.as_deref(), *baseline, *log_draws, *checkpoint_every, resume.as_deref(), out)
        }
        Job::Ablate { grid, seeds } => {
            let table = sim::ablate(grid, seeds)?;
            let mut w = create(out, "ablation.csv")?;
            table.write_csv(&mut w)?;
            finish(w)
        }
        Job::LrDump { plan } => {
            plan.validate()?;
            let mut w = create(out, "lr.csv")?;
            let io = |e: std::io::Error| Failure::Runtime(e.to_string());
            writeln!(w, "# acsim lr v1").map_err(io)?;
            writeln!(w, "iteration,stage,lr").map_err(io)?;
            for (t, stage, lr) in plan.trace() {
                writeln!(w, "{t},{},{lr:e}", stage.as_str()).map_err(io)?;
            }
            finish(w)
        }
    }
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    schema: &'static str,
    seed: u64,
    /// Mean drawn-clip noise rate over all epochs.
    noise_rate: f64,
    sim: &'a SimSummary,
    eval: EvalResult,
    baseline: Option<SimSummary>,
    overlap_gain: Option<f64>,
}

fn load_corpus(path: &Path) -> Result<Vec<corpus::Video>, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    Ok(corpus::read_corpus(BufReader::new(file))?)
}

fn write_checkpoint(sim: &Simulator, out: &Path) -> Result<(), Failure> {
    // write then rename so an interrupted write never replaces a good checkpoint
    let tmp = out.join("checkpoint.json.tmp");
    let mut w = BufWriter::new(File::create(&tmp).map_err(|e| Failure::io(&tmp, e))?);
    sim.checkpoint().write(&mut w)?;
    finish(w)?;
    let dest = out.join("checkpoint.json");
    fs::rename(&tmp, &dest).map_err(|e| Failure::io(&dest, e))
}

fn run_sim(
    cfg: &SimConfig,
    corpus_file: Option<&Path>,
    baseline: bool,
    log_draws: bool,
    checkpoint_every: Option<usize>,
    resume: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let videos = corpus_file.map(load_corpus).transpose()?;
    let mut simulator = match resume {
        Some(path) => {
            let file = File::open(path).map_err(|e| Failure::io(path, e))?;
            let ckpt = Checkpoint::read(BufReader::new(file))?;
            match videos.clone() {
                Some(v) => Simulator::resume_with_corpus(ckpt, v)?,
                None => Simulator::resume(ckpt)?,
            }
        }
        None => match videos.clone() {
            Some(v) => Simulator::with_corpus(cfg.clone(), v)?,
            None => Simulator::new(cfg.clone())?,
        },
    };
    let mut draws = Vec::new();
    while !simulator.is_finished() {
        let (_, d) = simulator.step_epoch(log_draws)?;
        draws.extend(d);
        if let Some(k) = checkpoint_every {
            if simulator.epochs_completed() % k == 0 || simulator.is_finished() {
                write_checkpoint(&simulator, out)?;
            }
        }
    }
    let report = simulator.report();
    let cfg = &simulator.config().clone();
    let eval = sim::evaluate(cfg, simulator.corpus(), cfg.views)?;

    let mut w = create(out, "report.csv")?;
    sim::write_report_csv(&mut w, &report.rows)?;
    finish(w)?;
    if log_draws {
        let mut w = create(out, "draws.csv")?;
        sim::write_draws_csv(&mut w, &draws)?;
        finish(w)?;
    }

    let base = if baseline && cfg.use_acs {
        let base_cfg = sim::baseline_of(cfg);
        let mut base_sim = match videos {
            Some(v) => Simulator::with_corpus(base_cfg, v)?,
            None => Simulator::new(base_cfg)?,
        };
        base_sim.run_to_end()?;
        let base_report = base_sim.report();
        let mut w = create(out, "baseline_report.csv")?;
        sim::write_report_csv(&mut w, &base_report.rows)?;
        finish(w)?;
        Some(base_report)
    } else {
        None
    };

    let summary = SummaryFile {
        schema: "acsim summary v1",
        seed: cfg.seed,
        noise_rate: report.summary.mean_noise_rate,
        sim: &report.summary,
        eval,
        overlap_gain: base.as_ref().map(|b| sim::overlap_gain(&report, b)),
        baseline: base.map(|b| b.summary),
    };
    let mut w = create(out, "summary.json")?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(w).map_err(|e| Failure::Runtime(e.to_string()))?;
    finish(w)
}
