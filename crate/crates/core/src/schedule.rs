//! Three-stage learning-rate program.
//!
//! 1. head-only training at a fixed high rate,
//! 2. a half-cosine warmup rising from `warmup_start` to `warmup_end`,
//! 3. cosine decay with a warped phase:
//!    `η = η_min + ½ (η_max − η_min) (1 + cos((T_cur / T_max)^α · π))`.
//!
//! With `α > 1` the warped phase stays near zero longer, so more iterations run
//! close to `η_max`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    HeadOnly,
    Warmup,
    Main,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::HeadOnly => "head",
            Stage::Warmup => "warmup",
            Stage::Main => "main",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub head_only_iters: usize,
    pub head_lr: f64,
    pub warmup_iters: usize,
    pub warmup_start: f64,
    pub warmup_end: f64,
    /// `T_max`; the main stage covers `T_cur = 0..=T_max`.
    pub main_iters: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub alpha: f64,
}

pub const DEFAULT_STAGE_FRACTION: f64 = 0.05;

impl Default for SchedulePlan {
    fn default() -> Self {
        SchedulePlan::from_total(1000, DEFAULT_STAGE_FRACTION, DEFAULT_STAGE_FRACTION)
    }
}

impl SchedulePlan {
    /// Splits `total_iters` iterations (indexed `0..total_iters`) into stages,
    /// giving the head and warmup stages the requested fractions (rounded).
    pub fn from_total(total_iters: usize, head_fraction: f64, warmup_fraction: f64) -> Self {
        let total = total_iters.max(1);
        let head = (head_fraction * total as f64).round() as usize;
        let warmup = (warmup_fraction * total as f64).round() as usize;
        let head = head.min(total - 1);
        let warmup = warmup.min(total - 1 - head);
        SchedulePlan {
            head_only_iters: head,
            head_lr: 1e-2,
            warmup_iters: warmup,
            warmup_start: 1e-5,
            warmup_end: 1e-3,
            main_iters: total - 1 - head - warmup,
            eta_min: 1e-5,
            eta_max: 1e-3,
            alpha: 1.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_min < self.eta_max) {
            return Err(Error::config(format!(
                "eta_min ({}) must be below eta_max ({})",
                self.eta_min, self.eta_max
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Number of iterations in the plan; valid `t` are `0..len()`.
    pub fn len(&self) -> usize {
        self.head_only_iters + self.warmup_iters + self.main_iters + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stage_at(&self, t: usize) -> Stage {
        if t < self.head_only_iters {
            Stage::HeadOnly
        } else if t < self.head_only_iters + self.warmup_iters {
            Stage::Warmup
        } else {
            Stage::Main
        }
    }

    /// Main-stage rate at `T_cur`.
    pub fn lr_main(&self, t_cur: usize) -> Result<f64> {
        if t_cur > self.main_iters {
            return Err(Error::ScheduleOutOfRange { t_cur, t_max: self.main_iters });
        }
        if self.main_iters == 0 {
            return Ok(self.eta_min);
        }
        let phase = (t_cur as f64 / self.main_iters as f64).powf(self.alpha);
        Ok(self.eta_min + 0.5 * (self.eta_max - self.eta_min) * (1.0 + (phase * PI).cos()))
    }

    /// Rate at global iteration `t`.
    pub fn lr_at(&self, t: usize) -> Result<f64> {
        if t >= self.len() {
            return Err(Error::ScheduleExhausted { t, len: self.len() });
        }
        match self.stage_at(t) {
            Stage::HeadOnly => Ok(self.head_lr),
            Stage::Warmup => {
                let tau = (t - self.head_only_iters) as f64 / self.warmup_iters as f64;
                let rise = 0.5 * (1.0 - (tau * PI).cos());
                Ok(self.warmup_start + (self.warmup_end - self.warmup_start) * rise)
            }
            Stage::Main => self.lr_main(t - self.head_only_iters - self.warmup_iters),
        }
    }

    /// `(t, stage, lr)` for every iteration of the plan.
    pub fn trace(&self) -> Vec<(usize, Stage, f64)> {
        (0..self.len())
            .map(|t| (t, self.stage_at(t), self.lr_at(t).expect("t within plan")))
            .collect()
    }
}
