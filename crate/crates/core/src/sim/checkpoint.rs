//! Resumable simulation state.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! { "version": 1,
//!   "config": <SimConfig>,
//!   "rows": [<EpochRow>, ...],             // one per completed epoch
//!   "videos": [{ "video_id", "activated", "dropped", "scores",
//!                "sample_word_pos", "oracle_word_pos" }, ...] }
//! ```
//!
//! `scores` is `null` when ACS is off. The word positions restore each
//! video's random streams exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EpochRow, SimConfig, Simulator, VideoSlot};
use crate::acs::AcsState;
use crate::corpus::{self, Video};
use crate::error::{Error, Result};
use crate::rng::{self, DOMAIN_ORACLE, DOMAIN_SAMPLE};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoCheckpoint {
    pub video_id: u32,
    pub activated: bool,
    pub dropped: bool,
    pub scores: Option<Vec<f64>>,
    pub sample_word_pos: u128,
    pub oracle_word_pos: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: SimConfig,
    pub rows: Vec<EpochRow>,
    pub videos: Vec<VideoCheckpoint>,
}

impl Checkpoint {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_reader(input)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::config(format!("unsupported checkpoint version {}", ckpt.version)));
        }
        Ok(ckpt)
    }
}

impl Simulator {
    pub fn checkpoint(&self) -> Checkpoint {
        let videos = self
            .corpus
            .iter()
            .zip(&self.slots)
            .map(|(v, s)| VideoCheckpoint {
                video_id: v.id,
                activated: s.acs.as_ref().is_some_and(AcsState::is_activated),
                dropped: s.dropped,
                scores: s.acs.as_ref().map(|a| a.scores().to_vec()),
                sample_word_pos: s.sample_rng.get_word_pos(),
                oracle_word_pos: s.oracle_rng.get_word_pos(),
            })
            .collect();
        Checkpoint { version: CHECKPOINT_VERSION, config: self.cfg.clone(), rows: self.rows.clone(), videos }
    }

    /// Resumes from a checkpoint, regenerating the corpus from its config.
    pub fn resume(ckpt: Checkpoint) -> Result<Self> {
        let corpus = corpus::generate_corpus(&ckpt.config.corpus)?;
        Self::resume_with_corpus(ckpt, corpus)
    }

    pub fn resume_with_corpus(ckpt: Checkpoint, corpus: Vec<Video>) -> Result<Self> {
        let mut sim = Simulator::with_corpus(ckpt.config, corpus)?;
        if ckpt.videos.len() != sim.corpus.len() {
            return Err(Error::config(format!(
                "checkpoint holds {} videos, corpus has {}",
                ckpt.videos.len(),
                sim.corpus.len()
            )));
        }
        if ckpt.rows.len() > sim.cfg.epochs {
            return Err(Error::config("checkpoint is past the configured epoch count"));
        }
        let clip_len = sim.cfg.clip_len;
        let acs_on = sim.cfg.use_acs;
        let (seed, oracle_seed) = (sim.cfg.seed, sim.cfg.oracle.seed);
        for ((video, slot), saved) in sim.corpus.iter().zip(sim.slots.iter_mut()).zip(ckpt.videos) {
            if saved.video_id != video.id {
                return Err(Error::config(format!("checkpoint video {} does not match corpus video {}", saved.video_id, video.id)));
            }
            let acs = match (acs_on, saved.scores) {
                (true, Some(scores)) => {
                    if scores.len() != video.num_frames {
                        return Err(Error::config(format!("video {}: score vector has the wrong length", video.id)));
                    }
                    Some(AcsState::from_parts(scores, clip_len, saved.activated)?)
                }
                (false, None) => None,
                _ => return Err(Error::config("checkpoint ACS state does not match the config")),
            };
            let mut sample_rng = rng::substream(seed, DOMAIN_SAMPLE, video.id as u64);
            sample_rng.set_word_pos(saved.sample_word_pos);
            let mut oracle_rng = rng::substream(oracle_seed, DOMAIN_ORACLE, video.id as u64);
            oracle_rng.set_word_pos(saved.oracle_word_pos);
            *slot = VideoSlot { acs, sample_rng, oracle_rng, dropped: saved.dropped };
        }
        sim.rows = ckpt.rows;
        Ok(sim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusConfig;

    fn cfg(acs: bool) -> SimConfig {
        SimConfig {
            corpus: CorpusConfig { num_videos: 40, frames_range: (60, 120), gt_fraction_range: (0.05, 0.3), ..Default::default() },
            epochs: 25,
            use_acs: acs,
            ..SimConfig::default()
        }
        .with_seed(12)
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        for acs in [true, false] {
            let full = super::super::run(&cfg(acs)).unwrap();

            let mut first = Simulator::new(cfg(acs)).unwrap();
            for _ in 0..11 {
                first.step_epoch(false).unwrap();
            }
            let mut buf = Vec::new();
            first.checkpoint().write(&mut buf).unwrap();
            let mut resumed = Simulator::resume(Checkpoint::read(buf.as_slice()).unwrap()).unwrap();
            assert_eq!(resumed.epochs_completed(), 11);
            resumed.run_to_end().unwrap();
            assert_eq!(resumed.report(), full);
        }
    }

    #[test]
    fn rejects_mismatched_state() {
        let sim = Simulator::new(cfg(true)).unwrap();
        let mut ckpt = sim.checkpoint();
        ckpt.config.use_acs = false;
        assert!(Simulator::resume(ckpt).is_err());

        let mut ckpt = sim.checkpoint();
        ckpt.videos.pop();
        assert!(Simulator::resume(ckpt).is_err());

        let mut ckpt = sim.checkpoint();
        ckpt.version = 99;
        let mut buf = Vec::new();
        ckpt.write(&mut buf).unwrap();
        assert!(Checkpoint::read(buf.as_slice()).is_err());
    }
}
