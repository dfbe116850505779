//! Synthetic untrimmed-video corpus.
//!
//! Frame indices are 1-based and the ground-truth interval `[gt_start, gt_end]`
//! is inclusive on both ends. Overlap between a clip and the interval is
//! counted in whole frames; the overlap fraction is `|clip ∩ gt| / n`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, DOMAIN_CORPUS, DOMAIN_FRAMES};
use crate::sampling::{self, SamplerKind};

/// Per-frame synthetic pixel statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub id: u32,
    pub num_frames: usize,
    /// First ground-truth frame (1-based, inclusive).
    pub gt_start: usize,
    /// Last ground-truth frame (1-based, inclusive).
    pub gt_end: usize,
    pub label: u32,
    /// Seed that regenerates `frame_stats`.
    pub stats_seed: u64,
    pub frame_stats: Vec<FrameStats>,
}

impl Video {
    /// Builds a video and regenerates its frame statistics from `stats_seed`.
    pub fn new(
        id: u32,
        num_frames: usize,
        gt_start: usize,
        gt_end: usize,
        label: u32,
        stats_seed: u64,
    ) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::config(format!("video {id}: zero frames")));
        }
        if !(1 <= gt_start && gt_start <= gt_end && gt_end <= num_frames) {
            return Err(Error::config(format!(
                "video {id}: ground truth [{gt_start}, {gt_end}] not within [1, {num_frames}]"
            )));
        }
        Ok(Video {
            id,
            num_frames,
            gt_start,
            gt_end,
            label,
            stats_seed,
            frame_stats: frame_stats(stats_seed, num_frames),
        })
    }

    pub fn gt_len(&self) -> usize {
        self.gt_end - self.gt_start + 1
    }

    pub fn contains_gt(&self, frame: usize) -> bool {
        (self.gt_start..=self.gt_end).contains(&frame)
    }

    /// Number of the given frames that fall inside the ground-truth interval.
    pub fn overlap_frames(&self, frames: &[usize]) -> usize {
        frames.iter().filter(|&&f| self.contains_gt(f)).count()
    }

    /// `|frames ∩ gt| / |frames|`.
    pub fn overlap_fraction(&self, frames: &[usize]) -> f64 {
        if frames.is_empty() {
            return 0.0;
        }
        self.overlap_frames(frames) as f64 / frames.len() as f64
    }
}

/// Smooth random-walk brightness with per-frame variance in `[0.005, 0.03]`.
fn frame_stats(seed: u64, num_frames: usize) -> Vec<FrameStats> {
    let mut rng = rng::substream(seed, DOMAIN_FRAMES, 0);
    let step = Normal::new(0.0, 0.01).expect("valid normal");
    let mut mean: f64 = rng.random_range(0.3..0.7);
    (0..num_frames)
        .map(|_| {
            mean = (mean + step.sample(&mut rng)).clamp(0.05, 0.95);
            FrameStats {
                mean,
                variance: rng.random_range(0.005..0.03),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub num_videos: usize,
    /// Inclusive range of video lengths in frames.
    pub frames_range: (usize, usize),
    /// Ground-truth length as a fraction of the video length.
    pub gt_fraction_range: (f64, f64),
    pub num_classes: u32,
    pub seed: u64,
    /// Longest clip any consumer of this corpus will request.
    pub max_clip_len: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            num_videos: 1000,
            frames_range: (200, 200),
            gt_fraction_range: (0.05, 0.05),
            num_classes: 10,
            seed: 0,
            max_clip_len: 16,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let (fmin, fmax) = self.frames_range;
        if fmin == 0 || fmin > fmax {
            return Err(Error::config(format!("frames range [{fmin}, {fmax}] is empty")));
        }
        let (gmin, gmax) = self.gt_fraction_range;
        if !(gmin > 0.0 && gmin <= gmax && gmax <= 1.0) {
            return Err(Error::config(format!(
                "ground-truth fraction range [{gmin}, {gmax}] must be ordered within (0, 1]"
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        if self.max_clip_len == 0 {
            return Err(Error::config("clip length must be at least 1"));
        }
        if fmin < self.max_clip_len {
            return Err(Error::config(format!(
                "shortest video ({fmin} frames) is shorter than the clip length {}",
                self.max_clip_len
            )));
        }
        Ok(())
    }
}

/// Generates the corpus. Each video draws from its own stream, so video `i`
/// does not depend on how many videos follow it.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<Video>> {
    cfg.validate()?;
    (0..cfg.num_videos)
        .map(|i| {
            let mut rng = rng::substream(cfg.seed, DOMAIN_CORPUS, i as u64);
            let num_frames = rng.random_range(cfg.frames_range.0..=cfg.frames_range.1);
            let (gmin, gmax) = cfg.gt_fraction_range;
            let fraction = if gmin == gmax { gmin } else { rng.random_range(gmin..=gmax) };
            let gt_len = ((fraction * num_frames as f64).round() as usize).clamp(1, num_frames);
            let gt_start = rng.random_range(1..=num_frames - gt_len + 1);
            let label = rng.random_range(0..cfg.num_classes);
            let stats_seed = rng.random();
            Video::new(i as u32, num_frames, gt_start, gt_start + gt_len - 1, label, stats_seed)
        })
        .collect()
}

/// Fraction of all placements of an `n`-frame clip whose overlap with the
/// ground truth is below `overlap_threshold`.
///
/// Continuous placements are enumerated directly. Sparse placements (one frame
/// per chunk) are combined exactly by convolving the per-chunk hit
/// probabilities.
pub fn induced_noise_rate(
    video: &Video,
    n: usize,
    strategy: SamplerKind,
    overlap_threshold: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap_threshold) {
        return Err(Error::config(format!("overlap threshold {overlap_threshold} not in [0, 1]")));
    }
    let below = |count: usize| (count as f64 / n as f64) < overlap_threshold;
    match strategy {
        SamplerKind::Continuous { stride } => {
            let starts = sampling::feasible_starts(video.num_frames, n, stride)?;
            let noisy = (1..=starts)
                .filter(|&start| {
                    let hits = (0..n).filter(|j| video.contains_gt(start + j * stride)).count();
                    below(hits)
                })
                .count();
            Ok(noisy as f64 / starts as f64)
        }
        SamplerKind::Sparse => {
            sampling::check_len(video.num_frames, n)?;
            // dist[c] = probability that exactly c sampled frames hit the ground truth
            let mut dist = vec![0.0; n + 1];
            dist[0] = 1.0;
            for (j, (lo, hi)) in sampling::sparse_chunks(video.num_frames, n).enumerate() {
                let inside = (hi.min(video.gt_end) + 1).saturating_sub(lo.max(video.gt_start));
                let q = inside as f64 / (hi - lo + 1) as f64;
                for c in (0..=j + 1).rev() {
                    let stay = dist[c] * (1.0 - q);
                    let hit = if c > 0 { dist[c - 1] * q } else { 0.0 };
                    dist[c] = stay + hit;
                }
            }
            Ok(dist.iter().enumerate().filter(|(c, _)| below(*c)).map(|(_, p)| p).sum())
        }
    }
}

const CORPUS_HEADER: &str = "# acsim corpus v1";
const CORPUS_COLUMNS: &str = "# columns: id num_frames gt_start gt_end label stats_seed";

/// Writes one whitespace-separated record per video after a two-line header.
pub fn write_corpus<W: Write>(mut out: W, videos: &[Video]) -> Result<()> {
    writeln!(out, "{CORPUS_HEADER}")?;
    writeln!(out, "{CORPUS_COLUMNS}")?;
    for v in videos {
        writeln!(
            out,
            "{} {} {} {} {} {}",
            v.id, v.num_frames, v.gt_start, v.gt_end, v.label, v.stats_seed
        )?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<Video>> {
    let mut videos = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if idx == 0 && line.trim() != CORPUS_HEADER {
            return Err(Error::Parse { line: line_no, msg: format!("expected header {CORPUS_HEADER:?}") });
        }
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse { line: line_no, msg: format!("expected 6 fields, got {}", fields.len()) });
        }
        let bad = |what: &str| Error::Parse { line: line_no, msg: format!("bad {what}") };
        let id = fields[0].parse().map_err(|_| bad("id"))?;
        let num_frames = fields[1].parse().map_err(|_| bad("num_frames"))?;
        let gt_start = fields[2].parse().map_err(|_| bad("gt_start"))?;
        let gt_end = fields[3].parse().map_err(|_| bad("gt_end"))?;
        let label = fields[4].parse().map_err(|_| bad("label"))?;
        let stats_seed = fields[5].parse().map_err(|_| bad("stats_seed"))?;
        let video = Video::new(id, num_frames, gt_start, gt_end, label, stats_seed)
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        videos.push(video);
    }
    Ok(videos)
}
