use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling step of every series, in hours.
pub const STEP_HOURS: i64 = 1;

/// What a series measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesRole {
    NativeDemand,
    /// Solar generation stored as a non-positive injection.
    SolarInjection,
    NetDemand,
}

/// A uniformly sampled hourly power signal in kW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    start: DateTime<Utc>,
    role: SeriesRole,
    values: Vec<f64>,
}

impl PowerSeries {
    pub fn new(start: DateTime<Utc>, role: SeriesRole, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "{role:?} sample {i} is not finite"
            )));
        }
        if role == SeriesRole::SolarInjection {
            if let Some(i) = values.iter().position(|&v| v > 0.0) {
                return Err(Error::InvalidSeries(format!(
                    "solar injection sample {i} is positive ({})",
                    values[i]
                )));
            }
        }
        Ok(Self {
            start,
            role,
            values,
        })
    }

    pub fn zeros(start: DateTime<Utc>, role: SeriesRole, len: usize) -> Self {
        Self {
            start,
            role,
            values: vec![0.0; len],
        }
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn step() -> Duration {
        Duration::hours(STEP_HOURS)
    }

    pub fn role(&self) -> SeriesRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(STEP_HOURS * index as i64)
    }

    /// Index of `at` on this series' grid, if it falls inside the span.
    pub fn index_of(&self, at: DateTime<Utc>) -> Option<usize> {
        let offset = at.signed_duration_since(self.start);
        if offset < Duration::zero() || offset.num_seconds() % (3600 * STEP_HOURS) != 0 {
            return None;
        }
        let idx = (offset.num_hours() / STEP_HOURS) as usize;
        (idx < self.len()).then_some(idx)
    }

    /// Samples of the window `[end + 1 - len, end]`.
    pub fn window(&self, end: usize, len: usize) -> &[f64] {
        &self.values[end + 1 - len..=end]
    }

    pub fn same_span(&self, other: &PowerSeries) -> bool {
        self.start == other.start && self.len() == other.len()
    }

    /// Element-wise sum; the result takes `role`.
    pub fn sum_with(&self, other: &PowerSeries, role: SeriesRole) -> Result<PowerSeries> {
        if !self.same_span(other) {
            return Err(Error::SpanMismatch(format!(
                "{} samples from {} vs {} samples from {}",
                self.len(),
                self.start,
                other.len(),
                other.start
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        PowerSeries::new(self.start, role, values)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn from_parts_unchecked(
        start: DateTime<Utc>,
        role: SeriesRole,
        values: Vec<f64>,
    ) -> Self {
        Self {
            start,
            role,
            values,
        }
    }
}
