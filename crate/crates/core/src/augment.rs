//! Augmentations on small synthetic frame buffers.
//!
//! A [`Clip`] is an `n × H × W` array rendered from a video's per-frame
//! statistics. Geometric ops resample with nearest neighbour and keep the
//! buffer shape.

use std::sync::Arc;

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::Video;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng, DOMAIN_FRAMES};
use crate::sampling::{self, ClipSample, SamplerKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub frames: Array3<f64>,
    pub video_id: u32,
    pub frame_indices: Vec<usize>,
}

/// Whole-clip mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipStats {
    pub mean: f64,
    pub variance: f64,
}

impl Clip {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.frames.dim()
    }

    /// Mean and population variance over all pixels of all frames.
    pub fn stats(&self) -> ClipStats {
        let mean = self.frames.mean().unwrap_or(0.0);
        let variance = self.frames.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / self.frames.len() as f64;
        ClipStats { mean, variance }
    }
}

/// Renders the frames of `sample` as `height × width` buffers. Pixels of frame
/// `f` are normal draws around that frame's statistics, seeded by the video
/// and frame index so the same frame always renders the same way.
pub fn render_clip(video: &Video, sample: &ClipSample, height: usize, width: usize) -> Clip {
    let mut frames = Array3::zeros((sample.len(), height, width));
    for (mut plane, &f) in frames.axis_iter_mut(Axis(0)).zip(&sample.frame_indices) {
        let stats = video.frame_stats[f - 1];
        let noise = Normal::new(stats.mean, stats.variance.sqrt()).expect("positive variance");
        let mut rng = rng::substream(video.stats_seed, DOMAIN_FRAMES, f as u64);
        plane.iter_mut().for_each(|px| *px = noise.sample(&mut rng));
    }
    Clip { frames, video_id: video.id, frame_indices: sample.frame_indices.clone() }
}

/// Mixes every frame with one still image: `f' = λ f + (1 − λ) image`.
pub fn video_mixup(clip: &Clip, image: &Array2<f64>, lambda: f64) -> Result<Clip> {
    let (n, h, w) = clip.shape();
    if image.dim() != (h, w) {
        return Err(Error::ShapeMismatch { expected: vec![h, w], got: image.shape().to_vec() });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("mixup weight {lambda} not in [0, 1]")));
    }
    let mut frames = Array3::zeros((n, h, w));
    for (mut out, src) in frames.axis_iter_mut(Axis(0)).zip(clip.frames.axis_iter(Axis(0))) {
        ndarray::Zip::from(&mut out).and(&src).and(image).for_each(|o, &x, &b| {
            *o = lambda * x + (1.0 - lambda) * b;
        });
    }
    Ok(Clip { frames, ..clip.clone() })
}

/// Re-normalizes the clip to the donor's whole-clip mean and variance.
pub fn crossnorm(target: &Clip, donor: ClipStats) -> Result<Clip> {
    if !(donor.variance > 0.0) {
        return Err(Error::DegenerateClip(format!("donor variance {} is not positive", donor.variance)));
    }
    let own = target.stats();
    // a constant clip can show a rounding-level variance instead of zero
    if !(own.variance > 1e-24 * own.mean.mul_add(own.mean, 1.0)) {
        return Err(Error::DegenerateClip("target clip has zero variance".into()));
    }
    let scale = donor.variance.sqrt() / own.variance.sqrt();
    let frames = target.frames.mapv(|x| (x - own.mean) * scale + donor.mean);
    Ok(Clip { frames, ..target.clone() })
}

fn rotate(plane: &Array2<f64>, degrees: f64) -> Array2<f64> {
    let (h, w) = plane.dim();
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    Array2::from_shape_fn((h, w), |(y, x)| {
        // inverse-map the output pixel into the source
        let (dy, dx) = (y as f64 - cy, x as f64 - cx);
        let sy = (cos * dy - sin * dx + cy).round();
        let sx = (sin * dy + cos * dx + cx).round();
        if sy >= 0.0 && sx >= 0.0 && (sy as usize) < h && (sx as usize) < w {
            plane[(sy as usize, sx as usize)]
        } else {
            0.0
        }
    })
}

fn crop_resize(plane: &Array2<f64>, top: usize, left: usize, ch: usize, cw: usize) -> Array2<f64> {
    let (h, w) = plane.dim();
    Array2::from_shape_fn((h, w), |(y, x)| plane[(top + y * ch / h, left + x * cw / w)])
}

#[derive(Debug, Clone, PartialEq)]
pub enum AugOp {
    RandomRotate { max_degrees: f64 },
    /// Random crop covering at least `min_scale` of each side, resized back.
    Crop { min_scale: f64 },
    HorizontalFlip { prob: f64 },
    /// Transfers the statistics of a donor drawn from the pool.
    CrossNorm { donors: Arc<[ClipStats]> },
    /// Re-draws the temporal window from the full video.
    TemporalCrop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugChain {
    pub ops: Vec<AugOp>,
    pub branches: usize,
    pub height: usize,
    pub width: usize,
    /// Sampler used by `TemporalCrop`.
    pub sampler: SamplerKind,
}

impl AugChain {
    pub fn validate(&self) -> Result<()> {
        if self.branches == 0 {
            return Err(Error::config("augmentation chain needs at least one branch"));
        }
        if self.ops.iter().filter(|op| matches!(op, AugOp::TemporalCrop)).count() > 1 {
            return Err(Error::config("temporal crop may appear at most once per branch"));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::config("frame buffers need a positive size"));
        }
        for op in &self.ops {
            match op {
                AugOp::Crop { min_scale } if !(*min_scale > 0.0 && *min_scale <= 1.0) => {
                    return Err(Error::config(format!("crop scale {min_scale} not in (0, 1]")));
                }
                AugOp::HorizontalFlip { prob } if !(0.0..=1.0).contains(prob) => {
                    return Err(Error::config(format!("flip probability {prob} not in [0, 1]")));
                }
                AugOp::CrossNorm { donors } if donors.is_empty() => {
                    return Err(Error::config("crossnorm needs a donor pool"));
                }
                _ => {}
            }
        }
        self.sampler.validate()
    }

    /// Runs one branch with its own seed.
    ///
    /// The temporal crop, when present, picks the frames before rendering; the
    /// spatial ops then act on every frame alike, so they commute with it.
    pub fn apply_branch(&self, video: &Video, source: &ClipSample, seed: u64) -> Result<Clip> {
        let mut rng = SimRng::seed_from_u64(seed);
        let sample = if self.ops.iter().any(|op| matches!(op, AugOp::TemporalCrop)) {
            sampling::sample_clip(video, self.sampler, source.len(), None, &mut rng)?
        } else {
            source.clone()
        };
        let mut clip = render_clip(video, &sample, self.height, self.width);
        for op in &self.ops {
            clip = match op {
                AugOp::RandomRotate { max_degrees } => {
                    let deg = rng.random_range(-max_degrees.abs()..=max_degrees.abs());
                    map_planes(&clip, |p| rotate(p, deg))
                }
                AugOp::Crop { min_scale } => {
                    let (_, h, w) = clip.shape();
                    let ch = rng.random_range(((h as f64 * min_scale).ceil() as usize).max(1)..=h);
                    let cw = rng.random_range(((w as f64 * min_scale).ceil() as usize).max(1)..=w);
                    let top = rng.random_range(0..=h - ch);
                    let left = rng.random_range(0..=w - cw);
                    map_planes(&clip, |p| crop_resize(p, top, left, ch, cw))
                }
                AugOp::HorizontalFlip { prob } => {
                    if rng.random::<f64>() < *prob {
                        let mut flipped = clip.clone();
                        flipped.frames.invert_axis(Axis(2));
                        flipped.frames = flipped.frames.as_standard_layout().into_owned();
                        flipped
                    } else {
                        clip
                    }
                }
                AugOp::CrossNorm { donors } => {
                    let donor = donors[rng.random_range(0..donors.len())];
                    crossnorm(&clip, donor)?
                }
                AugOp::TemporalCrop => clip,
            };
        }
        Ok(clip)
    }
}

fn map_planes(clip: &Clip, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Clip {
    let mut frames = clip.frames.clone();
    for mut plane in frames.axis_iter_mut(Axis(0)) {
        let out = f(&plane.to_owned());
        plane.assign(&out);
    }
    Clip { frames, ..clip.clone() }
}

/// AugMix-style views: every branch applies the chain to the same source
/// sample with independently drawn parameters.
pub fn augmix_views<R: Rng + ?Sized>(
    video: &Video,
    source: &ClipSample,
    chain: &AugChain,
    rng: &mut R,
) -> Result<Vec<Clip>> {
    chain.validate()?;
    let seeds: Vec<u64> = (0..chain.branches).map(|_| rng.random()).collect();
    seeds.into_iter().map(|seed| chain.apply_branch(video, source, seed)).collect()
}

/// Mean pairwise squared distance between branch views: the quantity a
/// consistency loss would pull towards zero.
pub fn branch_divergence(views: &[Clip]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in views.iter().enumerate() {
        for b in &views[i + 1..] {
            total += (&a.frames - &b.frames).mapv(|d| d * d).mean().unwrap_or(0.0);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Whole-clip statistics per video, averaged from the per-frame statistics.
/// Serves as a CrossNorm donor pool.
pub fn donor_pool(videos: &[Video]) -> Arc<[ClipStats]> {
    videos
        .iter()
        .map(|v| {
            let n = v.frame_stats.len() as f64;
            let mean = v.frame_stats.iter().map(|s| s.mean).sum::<f64>() / n;
            // law of total variance over frames
            let within = v.frame_stats.iter().map(|s| s.variance).sum::<f64>() / n;
            let between = v.frame_stats.iter().map(|s| (s.mean - mean).powi(2)).sum::<f64>() / n;
            ClipStats { mean, variance: within + between }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn video() -> Video {
        Video::new(1, 200, 50, 80, 2, 17).unwrap()
    }

    fn source() -> ClipSample {
        ClipSample { video_id: 1, segment_index: Some(40), frame_indices: (40..56).collect() }
    }

    fn chain(ops: Vec<AugOp>, branches: usize) -> AugChain {
        AugChain { ops, branches, height: 8, width: 8, sampler: SamplerKind::continuous() }
    }

    #[test]
    fn rendering_is_deterministic() {
        let v = video();
        assert_eq!(render_clip(&v, &source(), 6, 5), render_clip(&v, &source(), 6, 5));
        assert_eq!(render_clip(&v, &source(), 6, 5).shape(), (16, 6, 5));
    }

    #[test]
    fn empty_chain_is_identity() {
        let v = video();
        let mut rng = seeded(0);
        let views = augmix_views(&v, &source(), &chain(vec![], 1), &mut rng).unwrap();
        assert_eq!(views, vec![render_clip(&v, &source(), 8, 8)]);
    }

    #[test]
    fn same_seed_same_branch() {
        let v = video();
        let donors = donor_pool(std::slice::from_ref(&v));
        let c = chain(
            vec![
                AugOp::TemporalCrop,
                AugOp::RandomRotate { max_degrees: 15.0 },
                AugOp::Crop { min_scale: 0.6 },
                AugOp::HorizontalFlip { prob: 0.5 },
                AugOp::CrossNorm { donors },
            ],
            2,
        );
        assert_eq!(c.apply_branch(&v, &source(), 99).unwrap(), c.apply_branch(&v, &source(), 99).unwrap());
    }

    #[test]
    fn ops_preserve_shape() {
        let v = video();
        let donors = donor_pool(std::slice::from_ref(&v));
        let c = chain(
            vec![
                AugOp::RandomRotate { max_degrees: 30.0 },
                AugOp::Crop { min_scale: 0.3 },
                AugOp::HorizontalFlip { prob: 1.0 },
                AugOp::CrossNorm { donors },
                AugOp::TemporalCrop,
            ],
            4,
        );
        let mut rng = seeded(3);
        for view in augmix_views(&v, &source(), &c, &mut rng).unwrap() {
            assert_eq!(view.shape(), (16, 8, 8));
        }
    }

    #[test]
    fn flip_is_mirror() {
        let v = video();
        let c = chain(vec![AugOp::HorizontalFlip { prob: 1.0 }], 1);
        let out = c.apply_branch(&v, &source(), 1).unwrap();
        let base = render_clip(&v, &source(), 8, 8);
        for f in 0..16 {
            for y in 0..8 {
                for x in 0..8 {
                    assert_eq!(out.frames[(f, y, x)], base.frames[(f, y, 7 - x)]);
                }
            }
        }
    }

    #[test]
    fn zero_rotation_is_identity() {
        let plane = Array2::from_shape_fn((5, 7), |(y, x)| (y * 7 + x) as f64);
        assert_eq!(rotate(&plane, 0.0), plane);
        let full = crop_resize(&plane, 0, 0, 5, 7);
        assert_eq!(full, plane);
    }

    #[test]
    fn chain_validation() {
        assert!(chain(vec![], 0).validate().is_err());
        assert!(chain(vec![AugOp::TemporalCrop, AugOp::TemporalCrop], 1).validate().is_err());
        assert!(chain(vec![AugOp::Crop { min_scale: 0.0 }], 1).validate().is_err());
        assert!(chain(vec![AugOp::CrossNorm { donors: Arc::from(vec![]) }], 1).validate().is_err());
    }

    #[test]
    fn mixup_shape_mismatch() {
        let clip = render_clip(&video(), &source(), 4, 4);
        assert!(matches!(
            video_mixup(&clip, &Array2::zeros((4, 5)), 0.5),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn crossnorm_rejects_flat_clip() {
        let clip = Clip { frames: Array3::from_elem((2, 3, 3), 0.4), video_id: 0, frame_indices: vec![1, 2] };
        assert!(matches!(
            crossnorm(&clip, ClipStats { mean: 0.0, variance: 1.0 }),
            Err(Error::DegenerateClip(_))
        ));
        let ok = render_clip(&video(), &source(), 3, 3);
        assert!(crossnorm(&ok, ClipStats { mean: 0.0, variance: 0.0 }).is_err());
    }

    #[test]
    fn divergence() {
        let v = video();
        let a = render_clip(&v, &source(), 4, 4);
        assert_eq!(branch_divergence(&[a.clone(), a.clone()]), 0.0);
        let mut b = a.clone();
        b.frames += 0.5;
        assert!((branch_divergence(&[a, b]) - 0.25).abs() < 1e-12);
    }
}
