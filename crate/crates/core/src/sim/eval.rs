use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimConfig;
use crate::corpus::Video;
use crate::error::{Error, Result};
use crate::oracle;
use crate::rng::{self, DOMAIN_EVAL};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub views: usize,
    pub top1: f64,
    pub top5: f64,
}

/// Classes ordered by averaged score, then by how many views predicted them,
/// then by id.
fn rank_classes(scores: &[f64], votes: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(votes[b].cmp(&votes[a]))
            .then(a.cmp(&b))
    });
    order
}

/// Top-1/top-5 accuracy of the oracle at the end of training under the
/// 1-view (central crop) or 10-view protocol.
///
/// All views of a video share one difficulty draw; per-class scores are
/// averaged over the views before ranking.
pub fn evaluate(cfg: &SimConfig, corpus: &[Video], protocol_views: usize) -> Result<EvalResult> {
    if corpus.is_empty() {
        return Err(Error::config("cannot evaluate an empty corpus"));
    }
    let num_classes = cfg.corpus.num_classes;
    let hits: Vec<Result<(bool, bool)>> = corpus
        .par_iter()
        .map(|video| {
            let mut rng = rng::substream(cfg.oracle.seed, DOMAIN_EVAL, video.id as u64);
            let difficulty = rng.random::<f64>();
            let views = sampling::test_views(video, cfg.sampler, cfg.clip_len, protocol_views)?;
            let mut scores = vec![0.0; num_classes as usize];
            let mut votes = vec![0usize; num_classes as usize];
            for view in &views {
                let fb = oracle::predict_with_difficulty(
                    view, video, &cfg.oracle, num_classes, cfg.epochs, difficulty, &mut rng,
                );
                for (acc, s) in scores.iter_mut().zip(oracle::class_scores(&fb, num_classes)) {
                    *acc += s;
                }
                votes[fb.predicted_label as usize] += 1;
            }
            for s in &mut scores {
                *s /= views.len() as f64;
            }
            let ranked = rank_classes(&scores, &votes);
            let label = video.label as usize;
            Ok((ranked[0] == label, ranked.iter().take(5).any(|&c| c == label)))
        })
        .collect();
    let mut top1 = 0usize;
    let mut top5 = 0usize;
    for h in hits {
        let (a, b) = h?;
        top1 += usize::from(a);
        top5 += usize::from(b);
    }
    let n = corpus.len() as f64;
    Ok(EvalResult { views: protocol_views, top1: top1 as f64 / n, top5: top5 as f64 / n })
}
