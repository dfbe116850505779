use std::io::Write;

use super::{DrawRecord, EpochRow, NOISE_OVERLAP_THRESHOLD};
use crate::error::Result;

pub const REPORT_COLUMNS: &str =
    "epoch,lr,draws,mean_overlap,noise_rate,top1,acs_draws,activated_fraction,all_negative_fraction,dropped";

/// Per-epoch CSV. The first line is a versioned comment naming the noise
/// threshold.
pub fn write_report_csv<W: Write>(mut out: W, rows: &[EpochRow]) -> Result<()> {
    writeln!(out, "# acsim report v1 noise_threshold={NOISE_OVERLAP_THRESHOLD}")?;
    writeln!(out, "{REPORT_COLUMNS}")?;
    for r in rows {
        writeln!(
            out,
            "{},{:e},{},{:.6},{:.6},{:.6},{},{:.6},{:.6},{}",
            r.epoch,
            r.lr,
            r.draws,
            r.mean_overlap,
            r.noise_rate,
            r.top1,
            r.acs_draws,
            r.activated_fraction,
            r.all_negative_fraction,
            r.dropped
        )?;
    }
    Ok(())
}

/// Draw log; sparse clips leave `segment_index` empty.
pub fn write_draws_csv<W: Write>(mut out: W, draws: &[DrawRecord]) -> Result<()> {
    writeln!(out, "# acsim draws v1")?;
    writeln!(out, "video_id,epoch,segment_index,first_frame,last_frame")?;
    for d in draws {
        let seg = d.segment_index.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", d.video_id, d.epoch, seg, d.first_frame, d.last_frame)?;
    }
    Ok(())
}
