use std::fmt::Write as _;
use std::path::Path;

use btm_disagg::data::{correlation_study, generate_synthetic_feeder, write_meter_csv, ScenarioEvent};
use btm_disagg::pipeline::{
    run_with_clusters, scenario_run, sensitivity_sweep, Clusters, DisaggregationReport, Method, PipelineConfig,
};
use btm_disagg::spectral::ClusteringResult;
use btm_disagg::{FeederDataset, MeterId, SynthConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{ClusterArgs, Command, CorrelateArgs, RunArgs, ScenarioArgs, SweepArgs, SynthArgs};
use crate::emit::{emit_plot_data, plot_files};
use crate::error::CliError;
use crate::files::{load_dataset, read_text, FileSet};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BTM_DISAGG_THREADS";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Cluster(a) => cluster(a),
        Command::Disaggregate(a) => disaggregate(a, Method::Rgvp),
        Command::Baseline(a) => disaggregate(a, Method::DirectDisaggregation),
        Command::Scenario(a) => scenario(a),
        Command::Sweep(a) => sweep(a),
        Command::Correlate(a) => correlate(a),
    }
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => SynthConfig::from_toml_str(&read_text(p)?)?,
        None => SynthConfig::default(),
    };
    if let Some(days) = a.days {
        cfg.days = days;
    }
    let ds = generate_synthetic_feeder(&cfg, a.seed)?;
    let mut meters = Vec::new();
    write_meter_csv(&ds, &mut meters)?;
    let mut set = FileSet::default();
    set.add("meters.csv", meters);
    set.add_json("groups.json", ds.groups())?;
    set.add_json("attributes.json", ds.attributes())?;
    set.add_json("synth_config.json", &cfg)?;
    let n = set.write_to(&a.out)?.len();
    println!(
        "synthesized {} samples for {} meters; wrote {n} files to {}",
        ds.len(),
        ds.meter_ids().count(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    k: usize,
    gamma_curve: &'a [(usize, f64)],
    members: &'a [Vec<MeterId>],
}

impl<'a> ClusterSummary<'a> {
    fn new(result: &'a ClusteringResult, members: &'a [Vec<MeterId>]) -> Self {
        Self {
            k: result.k,
            gamma_curve: &result.gamma_curve,
            members,
        }
    }
}

fn cluster(a: ClusterArgs) -> Result<(), CliError> {
    let cfg = a.pipeline.resolve()?;
    let ds = load_dataset(&a.data)?;
    let clusters = Clusters::build(&ds, &cfg, None)?;
    let membership = clusters.pool.membership();

    let mut gamma = String::from("kind,k,gamma\n");
    for (kind, r) in [("demand", &clusters.demand), ("solar", &clusters.solar)] {
        for (k, g) in &r.gamma_curve {
            writeln!(gamma, "{kind},{k},{g}").unwrap();
        }
    }
    let mut set = FileSet::default();
    set.add_json(
        "clusters.json",
        &serde_json::json!({
            "demand": ClusterSummary::new(&clusters.demand, &membership.demand),
            "solar": ClusterSummary::new(&clusters.solar, &membership.solar),
        }),
    )?;
    set.add("gamma.csv", gamma.into_bytes());
    set.write_to(&a.out)?;
    println!(
        "demand candidates: {}, solar candidates: {}; wrote {}",
        clusters.demand.k,
        clusters.solar.k,
        a.out.display()
    );
    Ok(())
}

fn report_line(r: &DisaggregationReport) -> String {
    let m = &r.metrics;
    format!(
        "{}: {} estimates, M = {}, N = {}, MAPE net {:.2}%{}{}",
        r.group,
        m.samples,
        r.demand_clusters(),
        r.solar_clusters(),
        m.mape_net,
        m.mape_demand.map(|v| format!(", demand {v:.2}%")).unwrap_or_default(),
        m.mape_solar.map(|v| format!(", solar {v:.2}%")).unwrap_or_default(),
    )
}

fn run_groups(
    ds: &FeederDataset,
    groups: &[String],
    cfg: &PipelineConfig,
    method: Method,
) -> Result<Vec<DisaggregationReport>, CliError> {
    let clusters = Clusters::build(ds, cfg, None)?;
    let run = || {
        groups
            .par_iter()
            .map(|g| run_with_clusters(ds, g, cfg, &clusters, method))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(worker_pool()?.install(run)?)
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn disaggregate(a: RunArgs, method: Method) -> Result<(), CliError> {
    let cfg = a.pipeline.resolve()?;
    let ds = load_dataset(&a.data)?;
    let groups: Vec<String> = match &a.group {
        Some(g) => vec![g.clone()],
        None if ds.groups().is_empty() => {
            return Err(CliError::Usage("no groups defined; pass --groups".into()));
        }
        None => ds.groups().keys().cloned().collect(),
    };
    let reports = run_groups(&ds, &groups, &cfg, method)?;

    if a.group.is_some() {
        let report = &reports[0];
        emit_plot_data(report, &[], &a.out)?;
        println!("{}", report_line(report));
        return Ok(());
    }
    let mut set = FileSet::default();
    let mut summary = String::from("group,samples,mape_net_pct,mape_demand_pct,mape_solar_pct\n");
    for r in &reports {
        let files = plot_files(r, &[])?;
        files.write_to(&a.out.join(&r.group))?;
        let m = &r.metrics;
        writeln!(
            summary,
            "{},{},{},{},{}",
            r.group,
            m.samples,
            m.mape_net,
            opt(m.mape_demand),
            opt(m.mape_solar)
        )
        .unwrap();
        println!("{}", report_line(r));
    }
    set.add("summary.csv", summary.into_bytes());
    set.write_to(&a.out)?;
    Ok(())
}

fn scenario(a: ScenarioArgs) -> Result<(), CliError> {
    let cfg = a.pipeline.resolve()?;
    let ds = load_dataset(&a.data)?;
    let events: Vec<ScenarioEvent> =
        serde_json::from_str(&read_text(&a.events)?).map_err(btm_disagg::Error::from)?;
    let run = scenario_run(&ds, &a.group, &cfg, &events)?;
    emit_plot_data(&run.report, &run.transitions, &a.out)?;
    println!("{}", report_line(&run.report));
    for t in &run.transitions {
        match t.transition_hours {
            Some(h) => println!("event at {}: recovered after {h} h", t.event_at),
            None => println!("event at {}: did not recover", t.event_at),
        }
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut cfg = a.pipeline.resolve()?;
    if let Some(r) = a.repeats {
        cfg.sweep_repeats = r;
    }
    if let Some(f) = a.fractions {
        cfg.observability_fractions = f;
    }
    if cfg.observability_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(CliError::Usage("fractions must lie in (0, 1]".into()));
    }
    let ds = load_dataset(&a.data)?;
    let rows = sensitivity_sweep(&ds, &a.group, &cfg, &cfg.observability_fractions)?;
    let mut csv = String::from("fraction,observed_pvs,runs,mean_mape_solar_pct,mean_mape_demand_pct\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.fraction, r.observed_pvs, r.runs, r.mean_mape_solar, r.mean_mape_demand
        )
        .unwrap();
        println!(
            "fraction {}: {} PVs, solar {:.2}%, demand {:.2}%",
            r.fraction, r.observed_pvs, r.mean_mape_solar, r.mean_mape_demand
        );
    }
    let mut set = FileSet::default();
    set.add("sweep.csv", csv.into_bytes());
    set.write_to(&a.out)?;
    Ok(())
}

fn correlate(a: CorrelateArgs) -> Result<(), CliError> {
    let ds = load_dataset(&a.data)?;
    let table = correlation_study(&ds, &a.sizes, a.seed)?;
    let mut csv = String::from("kind,key,correlation,pairs\n");
    for (size, c) in &table.demand_groups {
        writeln!(csv, "demand_groups,{size},{c},").unwrap();
    }
    for p in &table.pv_pairs {
        writeln!(csv, "pv_pairs,{},{},{}", opt(p.azimuth_gap_deg), p.mean_correlation, p.pairs).unwrap();
    }
    writeln!(csv, "demand_vs_generation,,{},", table.demand_vs_generation).unwrap();
    let mut set = FileSet::default();
    set.add("correlation.csv", csv.into_bytes());
    set.add_json("correlation.json", &table)?;
    set.write_to(&a.out)?;
    println!(
        "demand vs generation correlation {:.3}; wrote {}",
        table.demand_vs_generation,
        a.out.display()
    );
    Ok(())
}

/// Rejects an output path that exists and is not a directory before any
/// work is done.
pub(crate) fn check_out_dir(out: &Path) -> Result<(), CliError> {
    if out.exists() && !out.is_dir() {
        return Err(CliError::io(
            out,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output path is not a directory"),
        ));
    }
    Ok(())
}
