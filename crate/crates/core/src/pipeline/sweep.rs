use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::report::Method;
use super::stream::{run_with_clusters, Clusters};
use crate::data::FeederDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    /// Observed PVs kept at this fraction.
    pub observed_pvs: usize,
    /// Random subsets averaged.
    pub runs: usize,
    pub mean_mape_solar: f64,
    pub mean_mape_demand: f64,
}

fn subset_seed(seed: u64, fraction: f64, repeat: usize) -> u64 {
    seed ^ fraction.to_bits().rotate_left(17) ^ (repeat as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Re-runs the group with a seeded random subset of the observed PVs for
/// every fraction and averages the resulting MAPEs. The full set is run
/// once, since every subset of it is the same.
pub fn sensitivity_sweep(
    dataset: &FeederDataset,
    group: &str,
    cfg: &PipelineConfig,
    fractions: &[f64],
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let total = dataset.observed_pairs().len();
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!("observability fraction {fraction} is outside (0, 1]")));
        }
        let keep = (fraction * total as f64).round() as usize;
        if keep == 0 {
            return Err(Error::InvalidConfig(format!(
                "fraction {fraction} of {total} observed PVs keeps none"
            )));
        }
        let repeats = if keep == total { 1 } else { cfg.sweep_repeats };
        let (mut solar, mut demand) = (0.0, 0.0);
        for r in 0..repeats {
            let mut idx: Vec<usize> = (0..total).collect();
            if keep < total {
                idx.shuffle(&mut ChaCha8Rng::seed_from_u64(subset_seed(cfg.seed, fraction, r)));
                idx.truncate(keep);
                idx.sort_unstable();
            }
            let clusters = Clusters::build(dataset, cfg, Some(&idx))?;
            let report = run_with_clusters(dataset, group, cfg, &clusters, Method::Rgvp)?;
            let m = &report.metrics;
            let missing = || Error::MissingTruth(format!("group {group} has no ground truth"));
            solar += m.mape_solar.ok_or_else(missing)?;
            demand += m.mape_demand.ok_or_else(missing)?;
        }
        rows.push(SweepRow {
            fraction,
            observed_pvs: keep,
            runs: repeats,
            mean_mape_solar: solar / repeats as f64,
            mean_mape_demand: demand / repeats as f64,
        });
    }
    Ok(rows)
}
