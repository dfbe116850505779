use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{evaluate, Simulator, SimConfig};
use crate::error::{Error, Result};

/// Seed-averaged metrics of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub acs: bool,
    pub sampler: String,
    pub seeds: usize,
    pub final_overlap: f64,
    pub mean_noise_rate: f64,
    pub train_top1: f64,
    pub top1_1view: f64,
    pub top5_1view: f64,
    pub top1_10view: f64,
    pub top5_10view: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

pub const ABLATION_COLUMNS: &str = "name,acs,sampler,seeds,final_overlap,mean_noise_rate,train_top1,top1_1view,top5_1view,top1_10view,top5_10view";

impl AblationTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# acsim ablation v1")?;
        writeln!(out, "{ABLATION_COLUMNS}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.name.replace(',', ";"),
                if r.acs { "on" } else { "off" },
                r.sampler,
                r.seeds,
                r.final_overlap,
                r.mean_noise_rate,
                r.train_top1,
                r.top1_1view,
                r.top5_1view,
                r.top1_10view,
                r.top5_10view
            )?;
        }
        Ok(())
    }
}

/// Runs every configuration under the same seeds (corpus, sampling and oracle
/// seeds all set to each seed in turn) and averages the metrics per row.
pub fn ablate(grid: &[(String, SimConfig)], seeds: &[u64]) -> Result<AblationTable> {
    if grid.is_empty() {
        return Err(Error::config("ablation grid is empty"));
    }
    if seeds.is_empty() {
        return Err(Error::config("ablation needs at least one seed"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (name, base) in grid {
        let mut acc = [0.0f64; 7];
        for &seed in seeds {
            let cfg = base.clone().with_seed(seed);
            let mut sim = Simulator::new(cfg.clone())?;
            sim.run_to_end()?;
            let summary = sim.report().summary;
            let one = evaluate(&cfg, sim.corpus(), 1)?;
            let ten = evaluate(&cfg, sim.corpus(), 10)?;
            let values = [
                summary.final_mean_overlap,
                summary.mean_noise_rate,
                summary.final_top1,
                one.top1,
                one.top5,
                ten.top1,
                ten.top5,
            ];
            for (a, v) in acc.iter_mut().zip(values) {
                *a += v;
            }
        }
        let k = seeds.len() as f64;
        rows.push(AblationRow {
            name: name.clone(),
            acs: base.use_acs,
            sampler: base.sampler.to_string(),
            seeds: seeds.len(),
            final_overlap: acc[0] / k,
            mean_noise_rate: acc[1] / k,
            train_top1: acc[2] / k,
            top1_1view: acc[3] / k,
            top5_1view: acc[4] / k,
            top1_10view: acc[5] / k,
            top5_10view: acc[6] / k,
        });
    }
    Ok(AblationTable { rows })
}
