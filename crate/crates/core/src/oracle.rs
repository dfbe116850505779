//! Stochastic classifier stand-in.
//!
//! A clip with ground-truth overlap `o` is classified correctly with
//! probability `p(o) = p_bg + (p_fg - p_bg) * o`. Wrong predictions pick one of
//! the other `C - 1` classes uniformly.
//!
//! Confidence models:
//!
//! * `Fixed(c)`: every prediction reports `c`.
//! * `Calibrated`: a correct prediction reports `p(o)`; a wrong one reports
//!   `1/C + U * (1 - p(o)) / (C - 1)` with `U ~ Uniform[0, 1)`, i.e. chance
//!   level plus a draw scaled by the per-class share of the missing mass.
//!
//! Correctness is decided by comparing a difficulty draw `u ~ Uniform[0, 1)`
//! against `p(o)`. Training queries draw a fresh `u` each time; evaluation
//! shares one `u` across all views of a video, modelling a fixed network for
//! which a hard video is hard in every view.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acs::PredictionFeedback;
use crate::corpus::Video;
use crate::error::{Error, Result};
use crate::sampling::ClipSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceModel {
    Fixed(f64),
    Calibrated,
}

/// Linear ramp of the full-overlap accuracy from `initial_p_fg` to `p_fg`
/// over the first `epochs` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRamp {
    pub initial_p_fg: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Accuracy at full overlap.
    pub p_fg: f64,
    /// Accuracy at zero overlap; `None` means chance level `1/C`.
    pub p_bg: Option<f64>,
    pub confidence: ConfidenceModel,
    pub ramp: Option<AccuracyRamp>,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            p_fg: 0.9,
            p_bg: None,
            confidence: ConfidenceModel::Calibrated,
            ramp: None,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn p_bg_for(&self, num_classes: u32) -> f64 {
        self.p_bg.unwrap_or(1.0 / num_classes as f64)
    }

    pub fn validate(&self, num_classes: u32) -> Result<()> {
        if num_classes < 2 {
            return Err(Error::config("oracle needs at least 2 classes"));
        }
        let p_bg = self.p_bg_for(num_classes);
        if !(0.0 <= p_bg && p_bg <= self.p_fg && self.p_fg <= 1.0) {
            return Err(Error::config(format!(
                "need 0 <= p_bg ({p_bg}) <= p_fg ({}) <= 1",
                self.p_fg
            )));
        }
        if let ConfidenceModel::Fixed(c) = self.confidence {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::config(format!("fixed confidence {c} not in (0, 1]")));
            }
        }
        if let Some(ramp) = self.ramp {
            if !(p_bg <= ramp.initial_p_fg && ramp.initial_p_fg <= self.p_fg) {
                return Err(Error::config(format!(
                    "ramp start {} must lie in [p_bg, p_fg]",
                    ramp.initial_p_fg
                )));
            }
        }
        Ok(())
    }

    /// Full-overlap accuracy in effect at `epoch`.
    pub fn p_fg_at(&self, epoch: usize) -> f64 {
        match self.ramp {
            Some(AccuracyRamp { initial_p_fg, epochs }) if epochs > 0 && epoch < epochs => {
                initial_p_fg + (self.p_fg - initial_p_fg) * epoch as f64 / epochs as f64
            }
            _ => self.p_fg,
        }
    }

    /// `p(o)` at `epoch`.
    pub fn correct_probability(&self, overlap: f64, num_classes: u32, epoch: usize) -> f64 {
        let p_bg = self.p_bg_for(num_classes);
        p_bg + (self.p_fg_at(epoch) - p_bg) * overlap
    }
}

/// Queries the oracle with a fresh difficulty draw.
pub fn predict<R: Rng + ?Sized>(
    clip: &ClipSample,
    video: &Video,
    cfg: &OracleConfig,
    num_classes: u32,
    epoch: usize,
    rng: &mut R,
) -> PredictionFeedback {
    let difficulty = rng.random::<f64>();
    predict_with_difficulty(clip, video, cfg, num_classes, epoch, difficulty, rng)
}

/// Queries the oracle with a caller-supplied difficulty `u`; the prediction is
/// correct iff `u < p(o)`.
pub fn predict_with_difficulty<R: Rng + ?Sized>(
    clip: &ClipSample,
    video: &Video,
    cfg: &OracleConfig,
    num_classes: u32,
    epoch: usize,
    difficulty: f64,
    rng: &mut R,
) -> PredictionFeedback {
    let overlap = video.overlap_fraction(&clip.frame_indices);
    let p = cfg.correct_probability(overlap, num_classes, epoch);
    let correct = difficulty < p;
    let chance = 1.0 / num_classes as f64;
    let predicted_label = if correct {
        video.label
    } else {
        let other = rng.random_range(0..num_classes - 1);
        if other >= video.label {
            other + 1
        } else {
            other
        }
    };
    let predicted_confidence = match cfg.confidence {
        ConfidenceModel::Fixed(c) => c,
        ConfidenceModel::Calibrated if correct => p,
        ConfidenceModel::Calibrated => {
            chance + rng.random::<f64>() * (1.0 - p) / (num_classes - 1) as f64
        }
    };
    PredictionFeedback {
        segment_index: clip.segment_index.unwrap_or(0),
        predicted_label,
        predicted_confidence,
        true_label: video.label,
    }
}

/// Per-class score vector for a prediction: the predicted class gets the
/// confidence, every other class an equal share of the remainder, capped so
/// the predicted class is never outranked.
pub fn class_scores(fb: &PredictionFeedback, num_classes: u32) -> Vec<f64> {
    let conf = fb.predicted_confidence;
    let rest = ((1.0 - conf) / (num_classes - 1) as f64).min(conf);
    let mut scores = vec![rest; num_classes as usize];
    scores[fb.predicted_label as usize] = conf;
    scores
}
