use chrono::Timelike;

use crate::data::{FeederDataset, MeterId, PowerSeries};

const HOURS: usize = 24;

/// Mean value per hour of day.
fn mean_daily(series: &PowerSeries, scale: f64) -> Vec<f64> {
    let mut sums = [0.0; HOURS];
    let mut counts = [0usize; HOURS];
    for (i, v) in series.values().iter().enumerate() {
        let h = series.timestamp(i).hour() as usize;
        sums[h] += v * scale;
        counts[h] += 1;
    }
    sums.iter()
        .zip(counts)
        .map(|(s, c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Average daily load profile of every fully observable demand meter, in
/// dataset order.
pub fn demand_profiles(dataset: &FeederDataset) -> (Vec<MeterId>, Vec<Vec<f64>>) {
    dataset
        .observed_demand()
        .iter()
        .map(|m| (m.id.clone(), mean_daily(&m.demand, 1.0)))
        .unzip()
}

/// Average daily generation profile of every observed PV, scaled by its
/// observed peak so that orientation rather than size drives similarity.
pub fn solar_profiles(dataset: &FeederDataset) -> (Vec<MeterId>, Vec<Vec<f64>>) {
    dataset
        .observed_pairs()
        .iter()
        .map(|m| {
            let peak = m.injection.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let scale = if peak > 0.0 { -1.0 / peak } else { 0.0 };
            (m.id.clone(), mean_daily(&m.injection, scale))
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_feeder, SynthConfig};

    fn small() -> FeederDataset {
        let cfg = SynthConfig {
            demand_only_customers: 6,
            observed_pv_customers: 3,
            net_only_customers: 4,
            days: 10,
            ..SynthConfig::default()
        };
        generate_synthetic_feeder(&cfg, 3).unwrap()
    }

    #[test]
    fn demand_profile_is_hourly_mean() {
        let ds = small();
        let (ids, profiles) = demand_profiles(&ds);
        assert_eq!(ids.len(), 6);
        let series = ds.observed_demand()[0].demand.values();
        let oracle: f64 = (0..10).map(|d| series[d * 24 + 5]).sum::<f64>() / 10.0;
        assert!((profiles[0][5] - oracle).abs() < 1e-12);
    }

    #[test]
    fn solar_profiles_are_normalized_and_positive() {
        let ds = small();
        let (_, profiles) = solar_profiles(&ds);
        assert_eq!(profiles.len(), 3);
        for p in &profiles {
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(p[0], 0.0);
            assert!(p.iter().cloned().fold(0.0, f64::max) > 0.1);
        }
    }
}
