//! Adaptive Clip Selection.
//!
//! Each video keeps one score per frame. After every prediction on segment
//! `S_i`, the frames of `S_i` move by `±confidence` (plus when the predicted
//! label is right, minus when wrong). Once enough frames carry a nonzero
//! score, future clips are drawn from the segment distribution
//!
//! ```text
//! w_i = Σ_{k ∈ S_i} max(v_k, 0) + 1,        P_i = w_i / Σ_t w_t
//! ```
//!
//! instead of uniformly. Scores are stored unclipped; negatives only vanish
//! inside the weight.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

/// What to do with a video whose every frame scored negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeVideoMode {
    #[default]
    Keep,
    /// Drop the video from all later epochs.
    Ignore,
}

/// Magnitude applied by a score update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateWeight {
    /// The classifier's confidence in its predicted label.
    #[default]
    Confidence,
    /// The selection probability of the segment under the current weights.
    SelectionProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsConfig {
    /// Minimum fraction of frames with a nonzero score before weighted draws start.
    pub activation_threshold: f64,
    /// Epochs `0..warmup_epochs_excluded` neither collect scores nor activate.
    pub warmup_epochs_excluded: usize,
    pub negative_video_mode: NegativeVideoMode,
    pub update_weight: UpdateWeight,
}

impl Default for AcsConfig {
    fn default() -> Self {
        AcsConfig {
            activation_threshold: 0.70,
            warmup_epochs_excluded: 1,
            negative_video_mode: NegativeVideoMode::Keep,
            update_weight: UpdateWeight::Confidence,
        }
    }
}

impl AcsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.activation_threshold > 0.0 && self.activation_threshold <= 1.0) {
            return Err(Error::config(format!(
                "activation threshold {} not in (0, 1]",
                self.activation_threshold
            )));
        }
        Ok(())
    }

    /// Whether score updates are collected during `epoch`.
    pub fn collects(&self, epoch: usize) -> bool {
        epoch >= self.warmup_epochs_excluded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionFeedback {
    /// 1-based segment the prediction was made on.
    pub segment_index: usize,
    pub predicted_label: u32,
    pub predicted_confidence: f64,
    pub true_label: u32,
}

impl PredictionFeedback {
    pub fn is_correct(&self) -> bool {
        self.predicted_label == self.true_label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoVerdict {
    Normal,
    /// Every frame score is strictly negative.
    AllNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsState {
    clip_len: usize,
    scores: Vec<f64>,
    activated: bool,
}

impl AcsState {
    pub fn new(num_frames: usize, clip_len: usize) -> Result<Self> {
        sampling::check_len(num_frames, clip_len)?;
        Ok(AcsState { clip_len, scores: vec![0.0; num_frames], activated: false })
    }

    /// Restores a state from stored scores.
    pub fn from_parts(scores: Vec<f64>, clip_len: usize, activated: bool) -> Result<Self> {
        sampling::check_len(scores.len(), clip_len)?;
        Ok(AcsState { clip_len, scores, activated })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn clip_len(&self) -> usize {
        self.clip_len
    }

    pub fn num_frames(&self) -> usize {
        self.scores.len()
    }

    pub fn num_segments(&self) -> usize {
        self.scores.len() - self.clip_len + 1
    }

    pub fn is_activated(&self) -> bool {
        self.activated
    }

    /// Unnormalized segment weights `w_i`, one per segment, each `>= 1`.
    ///
    /// Runs a single sliding window over the clipped scores, so the cost is
    /// `O(N)` regardless of the clip length.
    pub fn segment_weights(&self) -> Vec<f64> {
        let n = self.clip_len;
        let clipped = |k: usize| self.scores[k].max(0.0);
        let mut weights = Vec::with_capacity(self.num_segments());
        let mut window: f64 = (0..n).map(clipped).sum();
        weights.push(window + 1.0);
        for start in 1..self.num_segments() {
            window += clipped(start + n - 1) - clipped(start - 1);
            // cancellation can leave a tiny negative residue on an all-zero window
            weights.push(window.max(0.0) + 1.0);
        }
        weights
    }

    /// Segment selection probabilities; strictly positive and summing to 1.
    pub fn segment_distribution(&self) -> Vec<f64> {
        let weights = self.segment_weights();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    fn check_segment(&self, segment: usize) -> Result<()> {
        if (1..=self.num_segments()).contains(&segment) {
            Ok(())
        } else {
            Err(Error::SegmentOutOfRange { segment, num_segments: self.num_segments() })
        }
    }

    /// Adds `+magnitude` (correct) or `-magnitude` (wrong) to every frame of
    /// the 1-based `segment`.
    pub fn apply_update(&mut self, segment: usize, correct: bool, magnitude: f64) -> Result<()> {
        self.check_segment(segment)?;
        let delta = if correct { magnitude } else { -magnitude };
        for v in &mut self.scores[segment - 1..segment - 1 + self.clip_len] {
            *v += delta;
        }
        Ok(())
    }

    /// Score update driven by the classifier's confidence.
    pub fn update_scores(&mut self, fb: &PredictionFeedback) -> Result<()> {
        if !(0.0..=1.0).contains(&fb.predicted_confidence) {
            return Err(Error::config(format!("confidence {} not in [0, 1]", fb.predicted_confidence)));
        }
        self.apply_update(fb.segment_index, fb.is_correct(), fb.predicted_confidence)
    }

    /// Score update using the configured magnitude.
    pub fn update_with(&mut self, fb: &PredictionFeedback, weight: UpdateWeight) -> Result<()> {
        match weight {
            UpdateWeight::Confidence => self.update_scores(fb),
            UpdateWeight::SelectionProbability => {
                self.check_segment(fb.segment_index)?;
                let p = self.segment_distribution()[fb.segment_index - 1];
                self.apply_update(fb.segment_index, fb.is_correct(), p)
            }
        }
    }

    /// Fraction of frames whose score is exactly nonzero.
    pub fn nonzero_fraction(&self) -> f64 {
        self.scores.iter().filter(|&&v| v != 0.0).count() as f64 / self.scores.len() as f64
    }

    /// Turns weighted sampling on once `epoch` is past the excluded warmup and
    /// the nonzero fraction reaches the threshold. Activation is permanent.
    pub fn maybe_activate(&mut self, cfg: &AcsConfig, epoch: usize) -> bool {
        if !self.activated && cfg.collects(epoch) && self.nonzero_fraction() >= cfg.activation_threshold {
            self.activated = true;
        }
        self.activated
    }

    /// Draws a 1-based segment: uniformly until activation, from
    /// [`segment_distribution`](Self::segment_distribution) afterwards.
    pub fn draw_segment<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let segments = self.num_segments();
        if !self.activated {
            return rng.random_range(1..=segments);
        }
        let weights = self.segment_weights();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                return i + 1;
            }
            target -= w;
        }
        // rounding can push the target past the last bucket
        segments
    }

    pub fn verdict(&self) -> VideoVerdict {
        if self.scores.iter().all(|&v| v < 0.0) {
            VideoVerdict::AllNegative
        } else {
            VideoVerdict::Normal
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn state(scores: &[f64], n: usize) -> AcsState {
        AcsState::from_parts(scores.to_vec(), n, false).unwrap()
    }

    fn feedback(segment: usize, correct: bool, confidence: f64) -> PredictionFeedback {
        PredictionFeedback {
            segment_index: segment,
            predicted_label: if correct { 1 } else { 2 },
            predicted_confidence: confidence,
            true_label: 1,
        }
    }

    #[test]
    fn zero_scores_give_uniform_weights() {
        let s = AcsState::new(5, 2).unwrap();
        assert_eq!(s.segment_weights(), vec![1.0; 4]);
        assert_eq!(s.segment_distribution(), vec![0.25; 4]);
    }

    #[test]
    fn negative_scores_are_clipped_in_weights() {
        let s = state(&[2.0, -1.0, 0.0, 3.0], 2);
        assert_eq!(s.segment_weights(), vec![3.0, 1.0, 4.0]);
        assert_eq!(s.segment_distribution(), vec![0.375, 0.125, 0.5]);
        assert_eq!(state(&[5.0, 0.0, 0.0], 3).segment_weights(), vec![6.0]);
    }

    #[test]
    fn update_signs() {
        let mut s = AcsState::new(4, 2).unwrap();
        s.update_scores(&feedback(2, true, 0.8)).unwrap();
        assert_eq!(s.scores(), &[0.0, 0.8, 0.8, 0.0]);

        let mut s = state(&[1.0, 1.0, 0.0], 2);
        s.update_scores(&feedback(1, false, 0.5)).unwrap();
        assert_eq!(s.scores(), &[0.5, 0.5, 0.0]);

        let mut s = AcsState::new(6, 3).unwrap();
        s.update_scores(&feedback(2, true, 0.6)).unwrap();
        s.update_scores(&feedback(2, false, 0.6)).unwrap();
        assert_eq!(s.scores(), &[0.0; 6]);

        assert!(s.update_scores(&feedback(5, true, 0.6)).is_err());
        assert!(s.update_scores(&feedback(0, true, 0.6)).is_err());
        assert!(s.update_scores(&feedback(1, true, 1.5)).is_err());
    }

    #[test]
    fn selection_probability_update() {
        let mut s = state(&[2.0, -1.0, 0.0, 3.0], 2);
        s.update_with(&feedback(3, true, 0.9), UpdateWeight::SelectionProbability).unwrap();
        assert_eq!(s.scores(), &[2.0, -1.0, 0.5, 3.5]);
    }

    #[test]
    fn activation_gate() {
        let cfg = AcsConfig::default();
        let mut scores = vec![0.0; 10];
        for v in scores.iter_mut().take(7) {
            *v = 0.3;
        }
        assert!(!state(&scores, 2).maybe_activate(&cfg, 0));
        assert!(state(&scores, 2).maybe_activate(&cfg, 3));
        scores[6] = 0.0;
        assert!(!state(&scores, 2).maybe_activate(&cfg, 3));
    }

    #[test]
    fn activation_is_sticky() {
        let cfg = AcsConfig::default();
        let mut s = state(&[1.0; 10], 2);
        assert!(s.maybe_activate(&cfg, 1));
        // wipe the scores back to zero; the flag stays
        s.apply_update(1, false, 1.0).unwrap();
        s.apply_update(3, false, 1.0).unwrap();
        s.apply_update(5, false, 1.0).unwrap();
        s.apply_update(7, false, 1.0).unwrap();
        s.apply_update(9, false, 1.0).unwrap();
        assert_eq!(s.nonzero_fraction(), 0.0);
        assert!(s.maybe_activate(&cfg, 2));
        assert!(s.is_activated());
    }

    #[test]
    fn verdicts() {
        assert_eq!(state(&[-1.0, -0.5, -2.0], 1).verdict(), VideoVerdict::AllNegative);
        assert_eq!(state(&[-1.0, 0.0, -2.0], 1).verdict(), VideoVerdict::Normal);
        assert_eq!(state(&[1.0, 1.0, 1.0], 1).verdict(), VideoVerdict::Normal);
    }

    #[test]
    fn single_segment_always_drawn() {
        let mut rng = seeded(5);
        let mut s = state(&[0.5, 0.0, 1.0], 3);
        for _ in 0..100 {
            assert_eq!(s.draw_segment(&mut rng), 1);
        }
        s.activated = true;
        for _ in 0..100 {
            assert_eq!(s.draw_segment(&mut rng), 1);
        }
    }

    #[test]
    fn draws_are_deterministic_per_rng() {
        let mut s = state(&[2.0, -1.0, 0.0, 3.0, 0.2, 0.0], 2);
        s.activated = true;
        let a: Vec<usize> = {
            let mut rng = seeded(9);
            (0..50).map(|_| s.draw_segment(&mut rng)).collect()
        };
        let b: Vec<usize> = {
            let mut rng = seeded(9);
            (0..50).map(|_| s.draw_segment(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_threshold() {
        let cfg = AcsConfig { activation_threshold: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = AcsConfig { activation_threshold: 1.2, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(AcsConfig::default().validate().is_ok());
    }
}
