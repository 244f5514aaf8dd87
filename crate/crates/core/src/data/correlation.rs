use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::FeederDataset;
use crate::error::{Error, Result};

/// Disjoint group pairs drawn per group size.
const DRAWS_PER_SIZE: usize = 20;
/// Azimuth gaps are bucketed to this resolution, degrees.
const AZIMUTH_BUCKET_DEG: f64 = 15.0;

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "pearson",
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::InvalidSeries("zero-variance series has no correlation".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvPairCorrelation {
    /// Bucketed azimuth difference; `None` when azimuths are unknown.
    pub azimuth_gap_deg: Option<f64>,
    pub mean_correlation: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    /// (group size, mean correlation between two disjoint group aggregates).
    pub demand_groups: Vec<(usize, f64)>,
    pub pv_pairs: Vec<PvPairCorrelation>,
    /// Correlation between aggregate native demand and aggregate generation.
    pub demand_vs_generation: f64,
}

fn sum_rows(rows: &[&[f64]], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r.iter()) {
            *a += v;
        }
    }
    acc
}

/// Correlation structure of the observable customers: demand-group
/// aggregates by size, PV pairs by azimuth gap, and demand vs generation.
pub fn correlation_study(
    dataset: &FeederDataset,
    group_sizes: &[usize],
    seed: u64,
) -> Result<CorrelationTable> {
    let demand: Vec<&[f64]> = dataset
        .observed_demand()
        .iter()
        .map(|m| m.demand.values())
        .chain(dataset.observed_pairs().iter().map(|m| m.demand.values()))
        .collect();
    let largest = group_sizes.iter().copied().max().unwrap_or(0);
    if group_sizes.contains(&0) {
        return Err(Error::InvalidConfig("group sizes must be positive".into()));
    }
    if demand.len() < 2 * largest {
        return Err(Error::InsufficientCustomers(format!(
            "{} demand customers cannot form two disjoint groups of {largest}",
            demand.len()
        )));
    }
    let pvs = dataset.observed_pairs();
    if pvs.len() < 2 {
        return Err(Error::InsufficientCustomers(format!(
            "need at least 2 observable PVs, found {}",
            pvs.len()
        )));
    }
    let len = dataset.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut demand_groups = Vec::with_capacity(group_sizes.len());
    let mut order: Vec<usize> = (0..demand.len()).collect();
    for &size in group_sizes {
        let mut total = 0.0;
        for _ in 0..DRAWS_PER_SIZE {
            order.shuffle(&mut rng);
            let pick = |idx: &[usize]| -> Vec<&[f64]> { idx.iter().map(|&i| demand[i]).collect() };
            let a = sum_rows(&pick(&order[..size]), len);
            let b = sum_rows(&pick(&order[size..2 * size]), len);
            total += pearson(&a, &b)?;
        }
        demand_groups.push((size, total / DRAWS_PER_SIZE as f64));
    }

    let mut buckets: BTreeMap<Option<i64>, (f64, usize)> = BTreeMap::new();
    for i in 0..pvs.len() {
        for j in i + 1..pvs.len() {
            let az = |id: &str| dataset.attribute(id).and_then(|a| a.azimuth_deg);
            let key = match (az(&pvs[i].id), az(&pvs[j].id)) {
                (Some(a), Some(b)) => Some(((a - b).abs() / AZIMUTH_BUCKET_DEG).round() as i64),
                _ => None,
            };
            let r = pearson(pvs[i].injection.values(), pvs[j].injection.values())?;
            let slot = buckets.entry(key).or_insert((0.0, 0));
            slot.0 += r;
            slot.1 += 1;
        }
    }
    let pv_pairs = buckets
        .into_iter()
        .map(|(key, (sum, n))| PvPairCorrelation {
            azimuth_gap_deg: key.map(|k| k as f64 * AZIMUTH_BUCKET_DEG),
            mean_correlation: sum / n as f64,
            pairs: n,
        })
        .collect();

    let total_demand = sum_rows(&demand, len);
    let generation: Vec<f64> = sum_rows(
        &pvs.iter().map(|m| m.injection.values()).collect::<Vec<_>>(),
        len,
    )
    .into_iter()
    .map(|v| -v)
    .collect();
    let demand_vs_generation = pearson(&total_demand, &generation)?;

    Ok(CorrelationTable {
        demand_groups,
        pv_pairs,
        demand_vs_generation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_correlation_is_one() {
        let a = [1.0, 3.0, 2.0, 5.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn anti_correlation() {
        let a = [1.0, 2.0, 3.0];
        let b = [3.0, 2.0, 1.0];
        assert!((pearson(&a, &b).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_series_rejected() {
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
