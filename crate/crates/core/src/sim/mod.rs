//! Training-loop simulator.
//!
//! Every epoch visits every video: draw a segment (uniform, or from the ACS
//! distribution once the video is activated), sample the clip, query the
//! oracle, and feed the prediction back into the video's scores. Each video
//! owns its sampling and oracle streams, so videos are processed in parallel
//! and the report is identical for any thread count.

mod ablate;
mod checkpoint;
mod eval;
mod report;

pub use ablate::{ablate, AblationRow, AblationTable};
pub use checkpoint::{Checkpoint, VideoCheckpoint, CHECKPOINT_VERSION};
pub use eval::{evaluate, EvalResult};
pub use report::{write_draws_csv, write_report_csv, REPORT_COLUMNS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acs::{AcsConfig, AcsState, NegativeVideoMode, VideoVerdict};
use crate::corpus::{self, CorpusConfig, Video};
use crate::error::{Error, Result};
use crate::oracle::{self, OracleConfig};
use crate::rng::{self, SimRng, DOMAIN_ORACLE, DOMAIN_SAMPLE};
use crate::sampling::{self, SamplerKind};
use crate::schedule::{SchedulePlan, DEFAULT_STAGE_FRACTION};

/// Clips with overlap below this fraction count as induced label noise.
pub const NOISE_OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub corpus: CorpusConfig,
    pub sampler: SamplerKind,
    pub clip_len: usize,
    pub epochs: usize,
    pub draws_per_video: usize,
    /// Off trains with uniform clip sampling only.
    pub use_acs: bool,
    pub acs: AcsConfig,
    pub oracle: OracleConfig,
    /// Clips per iteration; sets the iteration count of the schedule.
    pub batch_size: usize,
    pub head_fraction: f64,
    pub warmup_fraction: f64,
    pub alpha: f64,
    /// Test protocol: 1 or 10 views.
    pub views: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            corpus: CorpusConfig::default(),
            sampler: SamplerKind::continuous(),
            clip_len: 16,
            epochs: 200,
            draws_per_video: 1,
            use_acs: true,
            acs: AcsConfig::default(),
            oracle: OracleConfig::default(),
            batch_size: 12,
            head_fraction: DEFAULT_STAGE_FRACTION,
            warmup_fraction: DEFAULT_STAGE_FRACTION,
            alpha: 1.5,
            views: 1,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.draws_per_video == 0 {
            return Err(Error::config("draws per video must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.views != 1 && self.views != 10 {
            return Err(Error::config(format!("views must be 1 or 10, got {}", self.views)));
        }
        for (name, f) in [("head", self.head_fraction), ("warmup", self.warmup_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config(format!("{name} fraction {f} not in [0, 1]")));
            }
        }
        if self.head_fraction + self.warmup_fraction > 1.0 {
            return Err(Error::config("head and warmup fractions exceed the whole schedule"));
        }
        self.corpus.validate()?;
        self.sampler.validate()?;
        let span = match self.sampler {
            SamplerKind::Continuous { stride } => sampling::span(self.clip_len.max(1), stride),
            SamplerKind::Sparse => self.clip_len,
        };
        if self.clip_len == 0 || span > self.corpus.frames_range.0 {
            return Err(Error::config(format!(
                "clip of {} frames (span {span}) does not fit the shortest video ({} frames)",
                self.clip_len, self.corpus.frames_range.0
            )));
        }
        self.acs.validate()?;
        if self.use_acs {
            if self.sampler != SamplerKind::continuous() {
                return Err(Error::config("adaptive clip selection needs continuous stride-1 sampling"));
            }
        }
        self.oracle.validate(self.corpus.num_classes)?;
        self.schedule_plan().validate()
    }

    /// Sets the simulation, corpus and oracle seeds together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.corpus.seed = seed;
        self.oracle.seed = seed;
        self
    }

    /// Copy with explicit defaults filled in.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        cfg.oracle.p_bg = Some(self.oracle.p_bg_for(self.corpus.num_classes));
        cfg
    }

    pub fn iters_per_epoch(&self) -> usize {
        (self.corpus.num_videos * self.draws_per_video).div_ceil(self.batch_size).max(1)
    }

    pub fn schedule_plan(&self) -> SchedulePlan {
        let mut plan = SchedulePlan::from_total(
            self.epochs * self.iters_per_epoch(),
            self.head_fraction,
            self.warmup_fraction,
        );
        plan.alpha = self.alpha;
        plan
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    /// Learning rate at the first iteration of the epoch.
    pub lr: f64,
    pub draws: usize,
    pub mean_overlap: f64,
    /// Fraction of drawn clips with overlap below [`NOISE_OVERLAP_THRESHOLD`].
    pub noise_rate: f64,
    /// Oracle accuracy on the drawn clips.
    pub top1: f64,
    /// Draws taken from an ACS distribution rather than uniformly.
    pub acs_draws: usize,
    pub activated_fraction: f64,
    pub all_negative_fraction: f64,
    /// Videos skipped this epoch under the ignore mode.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub noise_threshold: f64,
    pub epochs: usize,
    pub num_videos: usize,
    pub acs: bool,
    pub first_epoch_overlap: f64,
    pub final_mean_overlap: f64,
    pub mean_noise_rate: f64,
    pub final_noise_rate: f64,
    pub final_top1: f64,
    pub final_activated_fraction: f64,
    pub final_all_negative_fraction: f64,
    pub epoch0_acs_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub rows: Vec<EpochRow>,
    pub summary: SimSummary,
}

/// One drawn clip, for the optional draw log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub video_id: u32,
    pub epoch: usize,
    pub segment_index: Option<usize>,
    pub first_frame: usize,
    pub last_frame: usize,
}

#[derive(Debug, Clone)]
struct VideoSlot {
    acs: Option<AcsState>,
    sample_rng: SimRng,
    oracle_rng: SimRng,
    dropped: bool,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    draws: usize,
    overlap: f64,
    noisy: usize,
    correct: usize,
    acs_draws: usize,
    dropped: usize,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.draws += o.draws;
        self.overlap += o.overlap;
        self.noisy += o.noisy;
        self.correct += o.correct;
        self.acs_draws += o.acs_draws;
        self.dropped += o.dropped;
        self
    }
}

pub struct Simulator {
    cfg: SimConfig,
    corpus: Vec<Video>,
    slots: Vec<VideoSlot>,
    plan: SchedulePlan,
    rows: Vec<EpochRow>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let corpus = corpus::generate_corpus(&cfg.corpus)?;
        Self::with_corpus(cfg, corpus)
    }

    /// Simulates over an existing corpus (for example one read from disk).
    /// The corpus size replaces `cfg.corpus.num_videos`, which sets the iterations per epoch.
    pub fn with_corpus(mut cfg: SimConfig, corpus: Vec<Video>) -> Result<Self> {
        cfg.corpus.num_videos = corpus.len();
        cfg.validate()?;
        let slots = corpus
            .iter()
            .map(|v| {
                let acs = if cfg.use_acs { Some(AcsState::new(v.num_frames, cfg.clip_len)?) } else { None };
                Ok(VideoSlot {
                    acs,
                    sample_rng: rng::substream(cfg.seed, DOMAIN_SAMPLE, v.id as u64),
                    oracle_rng: rng::substream(cfg.oracle.seed, DOMAIN_ORACLE, v.id as u64),
                    dropped: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = cfg.schedule_plan();
        Ok(Simulator { cfg, corpus, slots, plan, rows: Vec::new() })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn corpus(&self) -> &[Video] {
        &self.corpus
    }

    pub fn rows(&self) -> &[EpochRow] {
        &self.rows
    }

    pub fn epochs_completed(&self) -> usize {
        self.rows.len()
    }

    pub fn is_finished(&self) -> bool {
        self.rows.len() >= self.cfg.epochs
    }

    pub fn acs_states(&self) -> impl Iterator<Item = (u32, Option<&AcsState>)> {
        self.corpus.iter().zip(&self.slots).map(|(v, s)| (v.id, s.acs.as_ref()))
    }

    /// Runs the next epoch. With `log_draws` the drawn clips are returned too.
    pub fn step_epoch(&mut self, log_draws: bool) -> Result<(EpochRow, Vec<DrawRecord>)> {
        if self.is_finished() {
            return Err(Error::config("simulation already ran all epochs"));
        }
        let epoch = self.rows.len();
        let cfg = &self.cfg;
        let results: Vec<Result<(Tally, Vec<DrawRecord>)>> = self
            .slots
            .par_iter_mut()
            .zip(self.corpus.par_iter())
            .map(|(slot, video)| run_video_epoch(cfg, video, slot, epoch, log_draws))
            .collect();

        let mut tally = Tally::default();
        let mut draws = Vec::new();
        for r in results {
            let (t, d) = r?;
            tally = tally.add(t);
            draws.extend(d);
        }
        let videos = self.slots.len().max(1) as f64;
        let activated = self.slots.iter().filter(|s| s.acs.as_ref().is_some_and(AcsState::is_activated)).count();
        let all_negative = self
            .slots
            .iter()
            .filter(|s| s.acs.as_ref().is_some_and(|a| a.verdict() == VideoVerdict::AllNegative))
            .count();
        let per_draw = |x: f64| if tally.draws == 0 { 0.0 } else { x / tally.draws as f64 };
        let row = EpochRow {
            epoch,
            lr: self.plan.lr_at(epoch * self.cfg.iters_per_epoch())?,
            draws: tally.draws,
            mean_overlap: per_draw(tally.overlap),
            noise_rate: per_draw(tally.noisy as f64),
            top1: per_draw(tally.correct as f64),
            acs_draws: tally.acs_draws,
            activated_fraction: activated as f64 / videos,
            all_negative_fraction: all_negative as f64 / videos,
            dropped: tally.dropped,
        };
        self.rows.push(row.clone());
        Ok((row, draws))
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step_epoch(false)?;
        }
        Ok(())
    }

    pub fn report(&self) -> SimReport {
        let rows = self.rows.clone();
        let last = rows.last();
        let pick = |f: fn(&EpochRow) -> f64| last.map(f).unwrap_or(0.0);
        let summary = SimSummary {
            noise_threshold: NOISE_OVERLAP_THRESHOLD,
            epochs: rows.len(),
            num_videos: self.corpus.len(),
            acs: self.cfg.use_acs,
            first_epoch_overlap: rows.first().map(|r| r.mean_overlap).unwrap_or(0.0),
            final_mean_overlap: pick(|r| r.mean_overlap),
            mean_noise_rate: if rows.is_empty() {
                0.0
            } else {
                rows.iter().map(|r| r.noise_rate).sum::<f64>() / rows.len() as f64
            },
            final_noise_rate: pick(|r| r.noise_rate),
            final_top1: pick(|r| r.top1),
            final_activated_fraction: pick(|r| r.activated_fraction),
            final_all_negative_fraction: pick(|r| r.all_negative_fraction),
            epoch0_acs_draws: rows.first().map(|r| r.acs_draws).unwrap_or(0),
        };
        SimReport { rows, summary }
    }
}

fn run_video_epoch(
    cfg: &SimConfig,
    video: &Video,
    slot: &mut VideoSlot,
    epoch: usize,
    log_draws: bool,
) -> Result<(Tally, Vec<DrawRecord>)> {
    let mut tally = Tally::default();
    let mut log = Vec::new();
    if let Some(state) = &slot.acs {
        if !slot.dropped
            && cfg.acs.negative_video_mode == NegativeVideoMode::Ignore
            && state.verdict() == VideoVerdict::AllNegative
        {
            slot.dropped = true;
        }
    }
    if slot.dropped {
        tally.dropped = 1;
        return Ok((tally, log));
    }
    let num_classes = cfg.corpus.num_classes;
    for _ in 0..cfg.draws_per_video {
        let (clip, weighted) = match &slot.acs {
            Some(state) => {
                let segment = state.draw_segment(&mut slot.sample_rng);
                let clip = sampling::sample_clip(video, cfg.sampler, cfg.clip_len, Some(segment), &mut slot.sample_rng)?;
                (clip, state.is_activated())
            }
            None => (sampling::sample_clip(video, cfg.sampler, cfg.clip_len, None, &mut slot.sample_rng)?, false),
        };
        let fb = oracle::predict(&clip, video, &cfg.oracle, num_classes, epoch, &mut slot.oracle_rng);
        let overlap = video.overlap_fraction(&clip.frame_indices);
        tally.draws += 1;
        tally.overlap += overlap;
        tally.noisy += usize::from(overlap < NOISE_OVERLAP_THRESHOLD);
        tally.correct += usize::from(fb.is_correct());
        tally.acs_draws += usize::from(weighted);
        if let Some(state) = slot.acs.as_mut() {
            if cfg.acs.collects(epoch) {
                state.update_with(&fb, cfg.acs.update_weight)?;
                state.maybe_activate(&cfg.acs, epoch);
            }
        }
        if log_draws {
            log.push(DrawRecord {
                video_id: video.id,
                epoch,
                segment_index: clip.segment_index,
                first_frame: clip.first_frame(),
                last_frame: clip.last_frame(),
            });
        }
    }
    Ok((tally, log))
}

/// Runs a whole simulation.
pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    let mut sim = Simulator::new(cfg.clone())?;
    sim.run_to_end()?;
    Ok(sim.report())
}

/// Same configuration with ACS switched off: the uniform baseline that shares
/// the corpus and random streams.
pub fn baseline_of(cfg: &SimConfig) -> SimConfig {
    SimConfig { use_acs: false, ..cfg.clone() }
}

/// Ratio of final-epoch overlaps, ACS over its uniform baseline.
pub fn overlap_gain(acs: &SimReport, baseline: &SimReport) -> f64 {
    acs.summary.final_mean_overlap / baseline.summary.final_mean_overlap
}
