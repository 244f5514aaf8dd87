use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::PowerSeries;
use crate::exemplar::Membership;
use crate::numerics::ConditionFlag;
use crate::sss::Quality;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Composite exemplars with learned weights.
    Rgvp,
    /// Best single candidate pair per window.
    DirectDisaggregation,
}

/// Estimates at one timestamp. Solar is a non-positive injection when the
/// fit is plausible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub demand: f64,
    pub solar: f64,
    /// Always `demand + solar`.
    pub net: f64,
    /// Demand estimate of each single-candidate trial.
    pub candidate_demand: Vec<f64>,
    /// Solar estimate of each single-candidate trial.
    pub candidate_solar: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// Index of the last sample of the window.
    pub end: usize,
    pub alpha: f64,
    pub beta: f64,
    pub residual_l1: f64,
    pub condition: ConditionFlag,
    pub quality: Quality,
    /// Weights used for this window.
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    /// Cumulative regrets after this window.
    pub cum_regret_demand: Vec<f64>,
    pub cum_regret_solar: Vec<f64>,
    /// Candidate pair chosen by the direct baseline.
    pub pair: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Timestamps with an estimate.
    pub samples: usize,
    pub mape_net: f64,
    /// Present when the group has ground truth.
    pub mape_demand: Option<f64>,
    pub mape_solar: Option<f64>,
}

/// Summed ground truth of the group, solar as injection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTruth {
    pub demand: Vec<f64>,
    pub solar: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisaggregationReport {
    pub group: String,
    pub method: Method,
    pub start: DateTime<Utc>,
    pub window: usize,
    pub stride: usize,
    pub membership: Membership,
    /// One entry per timestamp; `None` during warm-up.
    pub estimates: Vec<Option<Estimate>>,
    pub net_measured: Vec<f64>,
    pub truth: Option<GroupTruth>,
    pub windows: Vec<WindowRecord>,
    pub metrics: Metrics,
    pub runtime_secs: f64,
}

impl DisaggregationReport {
    pub fn demand_clusters(&self) -> usize {
        self.membership.demand.len()
    }

    pub fn solar_clusters(&self) -> usize {
        self.membership.solar.len()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + PowerSeries::step() * index as i32
    }

    /// Indices that carry an estimate.
    pub fn estimated(&self) -> impl Iterator<Item = (usize, &Estimate)> {
        self.estimates
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    /// The same report with the wall-clock runtime zeroed, for comparisons.
    pub fn without_runtime(&self) -> Self {
        Self {
            runtime_secs: 0.0,
            ..self.clone()
        }
    }
}
