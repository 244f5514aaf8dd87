use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use btm_disagg::pipeline::{DisaggregationReport, TransitionMetrics};
use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::error::CliError;
use crate::files::FileSet;

/// Bins per error histogram.
pub const HISTOGRAM_BINS: usize = 40;

pub(crate) fn stamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Equal-width bins over `[min, max]` of `errors`; every sample lands in
/// exactly one bin.
pub fn histogram(errors: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if errors.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for e in errors {
        let i = (((e - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

fn estimates_csv(r: &DisaggregationReport) -> String {
    let mut s = String::from("timestamp,demand_hat_kw,solar_hat_kw,net_hat_kw,net_measured_kw\n");
    for (i, e) in r.estimates.iter().enumerate() {
        let (d, g, n) = match e {
            Some(e) => (e.demand.to_string(), e.solar.to_string(), e.net.to_string()),
            None => Default::default(),
        };
        writeln!(s, "{},{d},{g},{n},{}", stamp(r.timestamp(i)), r.net_measured[i]).unwrap();
    }
    s
}

/// Long format: one row per timestamp, component and source.
fn series_csv(r: &DisaggregationReport) -> String {
    let mut s = String::from("timestamp,component,source,kw\n");
    for i in 0..r.len() {
        let ts = stamp(r.timestamp(i));
        writeln!(s, "{ts},net,measured,{}", r.net_measured[i]).unwrap();
        if let Some(t) = &r.truth {
            writeln!(s, "{ts},demand,truth,{}", t.demand[i]).unwrap();
            writeln!(s, "{ts},solar,truth,{}", t.solar[i]).unwrap();
        }
        if let Some(e) = &r.estimates[i] {
            writeln!(s, "{ts},demand,estimate,{}", e.demand).unwrap();
            writeln!(s, "{ts},solar,estimate,{}", e.solar).unwrap();
            writeln!(s, "{ts},net,estimate,{}", e.net).unwrap();
        }
    }
    s
}

fn windows_csv(r: &DisaggregationReport) -> String {
    let mut s = String::from("t,alpha,beta,residual_l1,condition,quality,demand_pair,solar_pair\n");
    for w in &r.windows {
        let cond = serde_json::to_value(w.condition).unwrap();
        let qual = serde_json::to_value(w.quality).unwrap();
        let (pi, pj) = w.pair.map_or((String::new(), String::new()), |(i, j)| (i.to_string(), j.to_string()));
        writeln!(
            s,
            "{},{},{},{},{},{},{pi},{pj}",
            stamp(r.timestamp(w.end)),
            w.alpha,
            w.beta,
            w.residual_l1,
            cond.as_str().unwrap_or_default(),
            qual.as_str().unwrap_or_default(),
        )
        .unwrap();
    }
    s
}

/// One row per window and candidate: `windows × (M + N)` rows.
fn weights_csv(r: &DisaggregationReport) -> String {
    let mut s = String::from("t,kind,index,weight,cum_regret\n");
    for w in &r.windows {
        let ts = stamp(r.timestamp(w.end));
        for (i, (wt, reg)) in w.omega.iter().zip(&w.cum_regret_demand).enumerate() {
            writeln!(s, "{ts},demand,{i},{wt},{reg}").unwrap();
        }
        for (j, (wt, reg)) in w.theta.iter().zip(&w.cum_regret_solar).enumerate() {
            writeln!(s, "{ts},solar,{j},{wt},{reg}").unwrap();
        }
    }
    s
}

/// Estimate minus reference for every estimated timestamp.
fn errors(r: &DisaggregationReport) -> Vec<(&'static str, Vec<f64>)> {
    let mut out = vec![(
        "net",
        r.estimated().map(|(i, e)| e.net - r.net_measured[i]).collect(),
    )];
    if let Some(t) = &r.truth {
        out.push(("demand", r.estimated().map(|(i, e)| e.demand - t.demand[i]).collect()));
        out.push(("solar", r.estimated().map(|(i, e)| e.solar - t.solar[i]).collect()));
    }
    out
}

fn histogram_csv(r: &DisaggregationReport) -> String {
    let mut s = String::from("component,bin,lower_kw,upper_kw,count\n");
    for (name, errs) in errors(r) {
        for (b, (lo, hi, c)) in histogram(&errs, HISTOGRAM_BINS).into_iter().enumerate() {
            writeln!(s, "{name},{b},{lo},{hi},{c}").unwrap();
        }
    }
    s
}

fn mape_csv(r: &DisaggregationReport) -> String {
    let m = &r.metrics;
    let mut s = String::from("group,method,component,mape_pct,samples\n");
    let method = serde_json::to_value(r.method).unwrap();
    let method = method.as_str().unwrap_or_default();
    for (name, v) in [("net", Some(m.mape_net)), ("demand", m.mape_demand), ("solar", m.mape_solar)] {
        writeln!(s, "{},{method},{name},{},{}", r.group, opt(v), m.samples).unwrap();
    }
    s
}

fn transitions_csv(transitions: &[TransitionMetrics]) -> String {
    let mut s = String::from("event_at,pre_event_mape_pct,transition_hours,post_transition_mape_pct\n");
    for t in transitions {
        writeln!(
            s,
            "{},{},{},{}",
            stamp(t.event_at),
            opt(t.pre_event_mape),
            t.transition_hours.map(|h| h.to_string()).unwrap_or_default(),
            opt(t.post_transition_mape),
        )
        .unwrap();
    }
    s
}

#[derive(Serialize)]
struct Summary<'a> {
    group: &'a str,
    method: btm_disagg::pipeline::Method,
    start: String,
    samples: usize,
    window: usize,
    stride: usize,
    demand_candidates: usize,
    solar_candidates: usize,
    membership: &'a btm_disagg::exemplar::Membership,
    metrics: &'a btm_disagg::pipeline::Metrics,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    group: &'a str,
    generated_at: String,
    runtime_secs: f64,
}

/// Stages every plot-ready file of `report`. The transitions file is only
/// included when there are events.
pub fn plot_files(report: &DisaggregationReport, transitions: &[TransitionMetrics]) -> Result<FileSet, CliError> {
    let mut set = FileSet::default();
    set.add("estimates.csv", estimates_csv(report).into_bytes());
    set.add("series.csv", series_csv(report).into_bytes());
    set.add("windows.csv", windows_csv(report).into_bytes());
    set.add("weights.csv", weights_csv(report).into_bytes());
    set.add("error_histogram.csv", histogram_csv(report).into_bytes());
    set.add("mape.csv", mape_csv(report).into_bytes());
    if !transitions.is_empty() {
        set.add("transitions.csv", transitions_csv(transitions).into_bytes());
    }
    set.add_json(
        "metrics.json",
        &Summary {
            group: &report.group,
            method: report.method,
            start: stamp(report.start),
            samples: report.len(),
            window: report.window,
            stride: report.stride,
            demand_candidates: report.demand_clusters(),
            solar_candidates: report.solar_clusters(),
            membership: &report.membership,
            metrics: &report.metrics,
        },
    )?;
    set.add_json(
        "metadata.json",
        &Metadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            group: &report.group,
            generated_at: stamp(Utc::now()),
            runtime_secs: report.runtime_secs,
        },
    )?;
    Ok(set)
}

/// Writes the plot-ready CSVs and JSON summaries of `report` into `out_dir`.
pub fn emit_plot_data(
    report: &DisaggregationReport,
    transitions: &[TransitionMetrics],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    plot_files(report, transitions)?.write_to(out_dir)
}
