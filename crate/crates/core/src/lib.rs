//! Simulation toolkit for adaptive clip selection on untrimmed videos.
//!
//! A synthetic corpus of videos with one annotated action interval each is
//! sampled clip by clip; a stochastic oracle stands in for the classifier and
//! its feedback drives per-frame scores that reshape the clip distribution.

pub mod acs;
pub mod augment;
pub mod config;
pub mod corpus;
pub mod error;
pub mod multihead;
pub mod oracle;
pub mod rng;
pub mod sampling;
pub mod schedule;
pub mod sim;

pub use acs::{AcsConfig, AcsState, NegativeVideoMode, PredictionFeedback, UpdateWeight, VideoVerdict};
pub use corpus::{generate_corpus, CorpusConfig, Video};
pub use error::{Error, Result};
pub use oracle::{ConfidenceModel, OracleConfig};
pub use sampling::{ClipSample, SamplerKind};
pub use schedule::{SchedulePlan, Stage};
pub use sim::{run, SimConfig, SimReport, Simulator};
