use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("clip length {clip_len} exceeds video length {num_frames}")]
    ClipLongerThanVideo { clip_len: usize, num_frames: usize },

    #[error("clip of {clip_len} frames at stride {stride} spans {span} frames but the video has {num_frames}")]
    InfeasibleClip {
        clip_len: usize,
        stride: usize,
        span: usize,
        num_frames: usize,
    },

    #[error("segment {segment} out of range 1..={num_segments}")]
    SegmentOutOfRange { segment: usize, num_segments: usize },

    #[error("T_cur = {t_cur} outside [0, {t_max}]")]
    ScheduleOutOfRange { t_cur: usize, t_max: usize },

    #[error("iteration {t} is past the end of a {len}-iteration schedule")]
    ScheduleExhausted { t: usize, len: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("degenerate clip: {0}")]
    DegenerateClip(String),

    #[error("unknown dataset id {0}")]
    UnknownDataset(u32),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// True for errors caused by the caller's configuration or input files
    /// rather than by the environment.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
