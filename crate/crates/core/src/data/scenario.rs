use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::FeederDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// A fraction of the unobservable PVs stops producing.
    PvFailure,
    /// A new unobservable PV of the given capacity (kW) comes online.
    PvInstall,
}

/// A behind-the-meter change the utility does not see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub at: DateTime<Utc>,
    pub kind: ScenarioKind,
    /// Failure fraction in [0, 1], or installed capacity in kW.
    pub fraction_or_capacity: f64,
    /// Hours the event lasts; `None` means until the end of the span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_hours: Option<usize>,
}

impl ScenarioEvent {
    pub fn failure(at: DateTime<Utc>, fraction: f64) -> Self {
        Self {
            at,
            kind: ScenarioKind::PvFailure,
            fraction_or_capacity: fraction,
            duration_hours: None,
        }
    }

    pub fn install(at: DateTime<Utc>, capacity_kw: f64) -> Self {
        Self {
            at,
            kind: ScenarioKind::PvInstall,
            fraction_or_capacity: capacity_kw,
            duration_hours: None,
        }
    }
}

/// Mean normalized generation shape of the observable PVs (non-positive,
/// peak magnitude at most 1). Used as the output of newly installed panels.
fn observed_unit_profile(dataset: &FeederDataset) -> Result<Vec<f64>> {
    let pvs = dataset.observed_pairs();
    if pvs.is_empty() {
        return Err(Error::EmptyObservableSet("S_G"));
    }
    let mut acc = vec![0.0; dataset.len()];
    let mut used = 0usize;
    for m in pvs {
        let peak = m.injection.values().iter().fold(0.0_f64, |a, v| a.max(-v));
        if peak <= 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(m.injection.values()) {
            *a += v / peak;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyObservableSet("S_G (no generation recorded)"));
    }
    acc.iter_mut().for_each(|a| *a /= used as f64);
    Ok(acc)
}

/// Applies `events` to the net-only customers and their ground truth.
/// Observable customers are never modified.
pub fn apply_scenario(
    dataset: &FeederDataset,
    events: &[ScenarioEvent],
    seed: u64,
) -> Result<FeederDataset> {
    if events.windows(2).any(|w| w[1].at < w[0].at) {
        return Err(Error::InvalidConfig("scenario events must be sorted by time".into()));
    }
    let mut out = dataset.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = dataset.len();

    for event in events {
        let from = dataset
            .index_of(event.at)
            .ok_or(Error::EventOutOfSpan { at: event.at })?;
        let to = event
            .duration_hours
            .map_or(len, |d| (from + d).min(len));

        match event.kind {
            ScenarioKind::PvFailure => {
                let fraction = event.fraction_or_capacity;
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::InvalidConfig(format!(
                        "failure fraction {fraction} is outside [0, 1]"
                    )));
                }
                let mut owners = Vec::new();
                for (i, m) in out.net_only.iter().enumerate() {
                    let truth = m.truth.as_ref().ok_or_else(|| {
                        Error::MissingTruth(format!("meter {} has no truth to fail", m.id))
                    })?;
                    if truth.injection.values().iter().any(|v| *v != 0.0) {
                        owners.push(i);
                    }
                }
                let count = (fraction * owners.len() as f64).round() as usize;
                owners.shuffle(&mut rng);
                for &i in &owners[..count] {
                    let meter = &mut out.net_only[i];
                    let truth = meter.truth.as_mut().expect("checked above");
                    for t in from..to {
                        truth.injection.values_mut()[t] = 0.0;
                        meter.net.values_mut()[t] = truth.demand.values()[t];
                    }
                }
            }
            ScenarioKind::PvInstall => {
                let capacity = event.fraction_or_capacity;
                if !(capacity > 0.0 && capacity.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "installed capacity {capacity} must be positive"
                    )));
                }
                if out.net_only.is_empty() {
                    return Err(Error::EmptyObservableSet("S_N"));
                }
                let unit = observed_unit_profile(dataset)?;
                let host = rng.random_range(0..out.net_only.len());
                let meter = &mut out.net_only[host];
                let truth = meter.truth.as_mut().ok_or_else(|| {
                    Error::MissingTruth(format!("meter {} has no truth", meter.id))
                })?;
                for t in from..to {
                    let g = truth.injection.values()[t] + capacity * unit[t];
                    truth.injection.values_mut()[t] = g.min(0.0);
                    meter.net.values_mut()[t] =
                        truth.demand.values()[t] + truth.injection.values()[t];
                }
            }
        }
    }
    Ok(out)
}
