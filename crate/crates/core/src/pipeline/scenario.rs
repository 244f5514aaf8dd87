use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::metrics::mape;
use super::report::DisaggregationReport;
use super::stream::run_stream;
use crate::data::{apply_scenario, FeederDataset, ScenarioEvent};
use crate::error::{Error, Result};

/// Rolling error must fall below this multiple of the pre-event error for
/// the estimator to count as recovered.
pub const RECOVERY_RATIO: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMetrics {
    pub event_at: DateTime<Utc>,
    /// Solar MAPE over the estimates between the previous event (or the
    /// start) and this one.
    pub pre_event_mape: Option<f64>,
    /// Hours from the event to the end of the first fully post-event
    /// rolling window whose solar MAPE is back under the threshold.
    pub transition_hours: Option<usize>,
    /// Solar MAPE from the end of the transition to the next event.
    pub post_transition_mape: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub report: DisaggregationReport,
    pub transitions: Vec<TransitionMetrics>,
}

fn solar_mape(report: &DisaggregationReport, from: usize, to: usize) -> Option<f64> {
    let truth = report.truth.as_ref()?;
    let (est, tru): (Vec<f64>, Vec<f64>) = (from..to)
        .filter_map(|i| report.estimates[i].as_ref().map(|e| (e.solar, truth.solar[i])))
        .unzip();
    mape(&est, &tru).ok()
}

/// Solar MAPE over the `len` samples ending at `end`, if all are estimated.
pub fn rolling_solar_mape(report: &DisaggregationReport, end: usize, len: usize) -> Option<f64> {
    if len == 0 || end + 1 < len || end >= report.len() {
        return None;
    }
    let from = end + 1 - len;
    if report.estimates[from..=end].iter().any(Option::is_none) {
        return None;
    }
    solar_mape(report, from, end + 1)
}

/// Applies the events, disaggregates the altered data and measures how
/// quickly the solar error recovers after each event.
pub fn scenario_run(
    dataset: &FeederDataset,
    group: &str,
    cfg: &PipelineConfig,
    events: &[ScenarioEvent],
) -> Result<ScenarioReport> {
    let altered = apply_scenario(dataset, events, cfg.seed)?;
    let report = run_stream(&altered, group, cfg)?;
    if !events.is_empty() && report.truth.is_none() {
        return Err(Error::MissingTruth(format!("group {group} has no ground truth")));
    }
    let len = report.len();
    let mut transitions = Vec::with_capacity(events.len());
    for (k, event) in events.iter().enumerate() {
        let at = altered.index_of(event.at).ok_or(Error::EventOutOfSpan { at: event.at })?;
        let seg_start = if k == 0 { 0 } else { altered.index_of(events[k - 1].at).unwrap_or(0) };
        let seg_end = events
            .get(k + 1)
            .and_then(|e| altered.index_of(e.at))
            .unwrap_or(len);
        let pre = solar_mape(&report, seg_start, at);
        let recovered = pre.and_then(|pre| {
            (at + cfg.window - 1..seg_end).find(|&tau| {
                rolling_solar_mape(&report, tau, cfg.window).is_some_and(|m| m < RECOVERY_RATIO * pre)
            })
        });
        transitions.push(TransitionMetrics {
            event_at: event.at,
            pre_event_mape: pre,
            transition_hours: recovered.map(|tau| tau + 1 - at),
            post_transition_mape: recovered.and_then(|tau| solar_mape(&report, tau, seg_end)),
        });
    }
    Ok(ScenarioReport { report, transitions })
}
