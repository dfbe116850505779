//! Flat `key = value` configuration text.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Later assignments win, so layering is just concatenation: defaults, then
//! a config file, then command-line flags.
//!
//! Grid files hold several named configs. Lines before the first `[name]`
//! header are shared by every section; each section then adds its own keys.

use crate::acs::{NegativeVideoMode, UpdateWeight};
use crate::error::{Error, Result};
use crate::oracle::{AccuracyRamp, ConfidenceModel};
use crate::sim::SimConfig;

/// Every key accepted by [`apply`], in the order [`to_text`] writes them.
pub const KEYS: &[&str] = &[
    "seed",
    "videos",
    "frames",
    "gt-frac",
    "classes",
    "corpus-seed",
    "clip-len",
    "sampler",
    "epochs",
    "draws-per-video",
    "acs",
    "activation-threshold",
    "warmup-epochs-excluded",
    "negative-mode",
    "update-weight",
    "p-fg",
    "p-bg",
    "confidence",
    "ramp",
    "oracle-seed",
    "batch-size",
    "head-frac",
    "warmup-frac",
    "alpha",
    "views",
];

pub type Assignment = (String, String);

/// Splits text into assignments. Errors carry 1-based line numbers.
pub fn parse(text: &str) -> Result<Vec<Assignment>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        out.push(split_line(line, i + 1)?);
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn split_line(line: &str, lineno: usize) -> Result<Assignment> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected key = value, got {line:?}") })?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(Error::Parse { line: lineno, msg: format!("empty key or value in {line:?}") });
    }
    Ok((k.to_string(), v.to_string()))
}

/// Parses a grid file into `(name, assignments)` pairs, each section already
/// prefixed with the shared assignments.
pub fn parse_grid(text: &str) -> Result<Vec<(String, Vec<Assignment>)>> {
    let mut shared = Vec::new();
    let mut sections: Vec<(String, Vec<Assignment>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if name.is_empty() || sections.iter().any(|(n, _)| n == name) {
                return Err(Error::Parse { line: i + 1, msg: format!("bad or repeated section [{name}]") });
            }
            sections.push((name.to_string(), Vec::new()));
            continue;
        }
        let kv = split_line(line, i + 1)?;
        match sections.last_mut() {
            Some((_, kvs)) => kvs.push(kv),
            None => shared.push(kv),
        }
    }
    if sections.is_empty() {
        return Err(Error::config("grid has no [sections]"));
    }
    Ok(sections
        .into_iter()
        .map(|(name, kvs)| (name, shared.iter().cloned().chain(kvs).collect()))
        .collect())
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::config(format!("{key}: cannot parse {value:?}")))
}

fn pair<T: std::str::FromStr + Copy>(key: &str, value: &str) -> Result<(T, T)> {
    match value.split_once(',') {
        Some((a, b)) => Ok((num(key, a.trim())?, num(key, b.trim())?)),
        None => {
            let x = num(key, value)?;
            Ok((x, x))
        }
    }
}

fn on_off(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(Error::config(format!("{key}: expected on|off, got {value:?}"))),
    }
}

/// Applies one assignment to `cfg`.
pub fn apply(cfg: &mut SimConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "seed" => {
            let s = num(key, value)?;
            *cfg = cfg.clone().with_seed(s);
        }
        "videos" => cfg.corpus.num_videos = num(key, value)?,
        "frames" => cfg.corpus.frames_range = pair(key, value)?,
        "gt-frac" => cfg.corpus.gt_fraction_range = pair(key, value)?,
        "classes" => cfg.corpus.num_classes = num(key, value)?,
        "corpus-seed" => cfg.corpus.seed = num(key, value)?,
        "clip-len" => {
            cfg.clip_len = num(key, value)?;
            cfg.corpus.max_clip_len = cfg.clip_len;
        }
        "sampler" => cfg.sampler = value.parse()?,
        "epochs" => cfg.epochs = num(key, value)?,
        "draws-per-video" => cfg.draws_per_video = num(key, value)?,
        "acs" => cfg.use_acs = on_off(key, value)?,
        "activation-threshold" => cfg.acs.activation_threshold = num(key, value)?,
        "warmup-epochs-excluded" => cfg.acs.warmup_epochs_excluded = num(key, value)?,
        "negative-mode" => {
            cfg.acs.negative_video_mode = match value {
                "keep" => NegativeVideoMode::Keep,
                "ignore" => NegativeVideoMode::Ignore,
                _ => return Err(Error::config(format!("{key}: expected keep|ignore, got {value:?}"))),
            }
        }
        "update-weight" => {
            cfg.acs.update_weight = match value {
                "confidence" => UpdateWeight::Confidence,
                "selection-probability" => UpdateWeight::SelectionProbability,
                _ => {
                    return Err(Error::config(format!(
                        "{key}: expected confidence|selection-probability, got {value:?}"
                    )))
                }
            }
        }
        "p-fg" => cfg.oracle.p_fg = num(key, value)?,
        "p-bg" => cfg.oracle.p_bg = if value == "chance" { None } else { Some(num(key, value)?) },
        "confidence" => {
            cfg.oracle.confidence = match value.split_once(':') {
                None if value == "calibrated" => ConfidenceModel::Calibrated,
                Some(("fixed", c)) => ConfidenceModel::Fixed(num(key, c)?),
                _ => return Err(Error::config(format!("{key}: expected calibrated|fixed:<c>, got {value:?}"))),
            }
        }
        "ramp" => {
            cfg.oracle.ramp = match value.split_once(':') {
                None if value == "off" => None,
                Some((start, epochs)) => {
                    Some(AccuracyRamp { initial_p_fg: num(key, start)?, epochs: num(key, epochs)? })
                }
                _ => return Err(Error::config(format!("{key}: expected off|<start>:<epochs>, got {value:?}"))),
            }
        }
        "oracle-seed" => cfg.oracle.seed = num(key, value)?,
        "batch-size" => cfg.batch_size = num(key, value)?,
        "head-frac" => cfg.head_fraction = num(key, value)?,
        "warmup-frac" => cfg.warmup_fraction = num(key, value)?,
        "alpha" => cfg.alpha = num(key, value)?,
        "views" => cfg.views = num(key, value)?,
        _ => return Err(Error::config(format!("unknown key {key:?}"))),
    }
    Ok(())
}

pub fn apply_all(cfg: &mut SimConfig, assignments: &[Assignment]) -> Result<()> {
    assignments.iter().try_for_each(|(k, v)| apply(cfg, k, v))
}

/// Renders every key of `cfg`; `apply_all(parse(to_text(cfg)))` on a default
/// config gives `cfg` back.
pub fn to_text(cfg: &SimConfig) -> String {
    let pair_text = |(a, b): (String, String)| if a == b { a } else { format!("{a},{b}") };
    let values: Vec<String> = vec![
        cfg.seed.to_string(),
        cfg.corpus.num_videos.to_string(),
        pair_text((cfg.corpus.frames_range.0.to_string(), cfg.corpus.frames_range.1.to_string())),
        pair_text((format!("{:?}", cfg.corpus.gt_fraction_range.0), format!("{:?}", cfg.corpus.gt_fraction_range.1))),
        cfg.corpus.num_classes.to_string(),
        cfg.corpus.seed.to_string(),
        cfg.clip_len.to_string(),
        cfg.sampler.to_string(),
        cfg.epochs.to_string(),
        cfg.draws_per_video.to_string(),
        if cfg.use_acs { "on" } else { "off" }.to_string(),
        format!("{:?}", cfg.acs.activation_threshold),
        cfg.acs.warmup_epochs_excluded.to_string(),
        match cfg.acs.negative_video_mode {
            NegativeVideoMode::Keep => "keep",
            NegativeVideoMode::Ignore => "ignore",
        }
        .to_string(),
        match cfg.acs.update_weight {
            UpdateWeight::Confidence => "confidence",
            UpdateWeight::SelectionProbability => "selection-probability",
        }
        .to_string(),
        format!("{:?}", cfg.oracle.p_fg),
        cfg.oracle.p_bg.map_or("chance".to_string(), |p| format!("{p:?}")),
        match cfg.oracle.confidence {
            ConfidenceModel::Calibrated => "calibrated".to_string(),
            ConfidenceModel::Fixed(c) => format!("fixed:{c:?}"),
        },
        cfg.oracle.ramp.map_or("off".to_string(), |r| format!("{:?}:{}", r.initial_p_fg, r.epochs)),
        cfg.oracle.seed.to_string(),
        cfg.batch_size.to_string(),
        format!("{:?}", cfg.head_fraction),
        format!("{:?}", cfg.warmup_fraction),
        format!("{:?}", cfg.alpha),
        cfg.views.to_string(),
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
}
