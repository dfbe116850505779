//! Temporal segments and clip samplers.
//!
//! Segment `S_i` (1-based) is the stride-1 window `{k : i <= k < i + n}`; a video
//! of `N` frames has `N - n + 1` of them. `Continuous { stride }` generalizes the
//! window to a fixed frame rate, while `Sparse` draws one frame per equal chunk.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Video;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// One frame drawn uniformly from each of `n` equal chunks of the video.
    Sparse,
    /// `n` frames at a fixed stride.
    Continuous { stride: usize },
}

impl SamplerKind {
    pub const fn continuous() -> Self {
        SamplerKind::Continuous { stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerKind::Continuous { stride: 0 } => Err(Error::config("stride must be at least 1")),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerKind::Sparse => write!(f, "sparse"),
            SamplerKind::Continuous { stride: 1 } => write!(f, "continuous"),
            SamplerKind::Continuous { stride } => write!(f, "continuous:{stride}"),
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    /// Accepts `sparse`, `continuous` and `continuous:<stride>`.
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "sparse" => SamplerKind::Sparse,
            "continuous" => SamplerKind::continuous(),
            other => match other.strip_prefix("continuous:") {
                Some(stride) => SamplerKind::Continuous {
                    stride: stride
                        .parse()
                        .map_err(|_| Error::config(format!("bad stride in {other:?}")))?,
                },
                None => return Err(Error::config(format!("unknown sampler {other:?}"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSample {
    pub video_id: u32,
    /// Start frame of a continuous clip; `None` for sparse clips.
    pub segment_index: Option<usize>,
    /// Strictly increasing, 1-based.
    pub frame_indices: Vec<usize>,
}

impl ClipSample {
    pub fn len(&self) -> usize {
        self.frame_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_indices.is_empty()
    }

    pub fn first_frame(&self) -> usize {
        self.frame_indices[0]
    }

    pub fn last_frame(&self) -> usize {
        self.frame_indices[self.frame_indices.len() - 1]
    }
}

pub(crate) fn check_len(num_frames: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::config("clip length must be at least 1"));
    }
    if n > num_frames {
        return Err(Error::ClipLongerThanVideo { clip_len: n, num_frames });
    }
    Ok(())
}

/// Number of stride-1 segments, `N - n + 1`.
pub fn enumerate_segments(num_frames: usize, n: usize) -> Result<usize> {
    check_len(num_frames, n)?;
    Ok(num_frames - n + 1)
}

/// Frames covered by segment `i` (1-based).
pub fn segment_frames(i: usize, n: usize) -> Range<usize> {
    i..i + n
}

/// Frames between the first and last frame of a strided clip, inclusive.
pub fn span(n: usize, stride: usize) -> usize {
    (n - 1) * stride + 1
}

/// Number of valid start frames for a strided clip.
pub fn feasible_starts(num_frames: usize, n: usize, stride: usize) -> Result<usize> {
    check_len(num_frames, n)?;
    if stride == 0 {
        return Err(Error::config("stride must be at least 1"));
    }
    let span = span(n, stride);
    if span > num_frames {
        return Err(Error::InfeasibleClip { clip_len: n, stride, span, num_frames });
    }
    Ok(num_frames - span + 1)
}

/// The `n` equal chunks of `[1, N]` as inclusive `(lo, hi)` pairs. Chunk `j`
/// covers `floor(j N / n) + 1 ..= floor((j + 1) N / n)`.
pub(crate) fn sparse_chunks(num_frames: usize, n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).map(move |j| (j * num_frames / n + 1, (j + 1) * num_frames / n))
}

fn strided(video_id: u32, start: usize, n: usize, stride: usize) -> ClipSample {
    ClipSample {
        video_id,
        segment_index: Some(start),
        frame_indices: (0..n).map(|j| start + j * stride).collect(),
    }
}

/// Draws a clip. For continuous sampling `segment` fixes the start frame;
/// otherwise the start is uniform over the feasible range.
pub fn sample_clip<R: Rng + ?Sized>(
    video: &Video,
    kind: SamplerKind,
    n: usize,
    segment: Option<usize>,
    rng: &mut R,
) -> Result<ClipSample> {
    match kind {
        SamplerKind::Continuous { stride } => {
            let starts = feasible_starts(video.num_frames, n, stride)?;
            let start = match segment {
                Some(i) if (1..=starts).contains(&i) => i,
                Some(i) => return Err(Error::SegmentOutOfRange { segment: i, num_segments: starts }),
                None => rng.random_range(1..=starts),
            };
            Ok(strided(video.id, start, n, stride))
        }
        SamplerKind::Sparse => {
            check_len(video.num_frames, n)?;
            if segment.is_some() {
                return Err(Error::config("sparse sampling has no segment index"));
            }
            let frame_indices = sparse_chunks(video.num_frames, n)
                .map(|(lo, hi)| rng.random_range(lo..=hi))
                .collect();
            Ok(ClipSample { video_id: video.id, segment_index: None, frame_indices })
        }
    }
}

/// Deterministic test-time views.
///
/// One view is the central crop (start `floor((N - span) / 2) + 1`, or the
/// middle of every chunk for sparse sampling). Ten views place their offsets at
/// `floor(v * range / 9)` for `v = 0..10`, which includes both extremes. Videos
/// with fewer than ten placements repeat offsets.
pub fn test_views(video: &Video, kind: SamplerKind, n: usize, num_views: usize) -> Result<Vec<ClipSample>> {
    if num_views != 1 && num_views != 10 {
        return Err(Error::config(format!("num_views must be 1 or 10, got {num_views}")));
    }
    // offset within [0, range] for view v
    let offset = |range: usize, v: usize| {
        if num_views == 1 {
            range / 2
        } else {
            v * range / (num_views - 1)
        }
    };
    match kind {
        SamplerKind::Continuous { stride } => {
            let starts = feasible_starts(video.num_frames, n, stride)?;
            Ok((0..num_views)
                .map(|v| strided(video.id, 1 + offset(starts - 1, v), n, stride))
                .collect())
        }
        SamplerKind::Sparse => {
            check_len(video.num_frames, n)?;
            Ok((0..num_views)
                .map(|v| ClipSample {
                    video_id: video.id,
                    segment_index: None,
                    frame_indices: sparse_chunks(video.num_frames, n)
                        .map(|(lo, hi)| lo + offset(hi - lo, v))
                        .collect(),
                })
                .collect())
        }
    }
}
