use std::path::PathBuf;

use btm_disagg::pipeline::{ClusterCount, PipelineConfig};
use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "btm-disagg",
    version,
    about = "Separate behind-the-meter solar from net demand using smart meter data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic feeder (meters.csv, groups.json, attributes.json).
    Synth(SynthArgs),
    /// Cluster the observable customers and report the candidate groups.
    Cluster(ClusterArgs),
    /// Disaggregate one group, or every group when --group is omitted.
    Disaggregate(RunArgs),
    /// Same as disaggregate, with the best single candidate pair per window.
    Baseline(RunArgs),
    /// Disaggregate after applying behind-the-meter events.
    Scenario(ScenarioArgs),
    /// Solar and demand error as the observed PV set shrinks.
    Sweep(SweepArgs),
    /// Correlation study of demand groups and PV pairs.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthesis config (TOML); defaults are used for missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides `days` from the config.
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Meter CSV with columns timestamp,meter_id,kind,kw.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON object mapping group names to meter ids.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// JSON object of per-meter attributes (pattern, azimuth, capacity).
    #[arg(long)]
    pub attributes: Option<PathBuf>,
}

/// Pipeline settings. Flags override values read from --config.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Window length in hours.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Number of demand candidates, or "auto".
    #[arg(long)]
    pub demand_clusters: Option<ClusterCount>,
    /// Number of solar candidates, or "auto".
    #[arg(long)]
    pub solar_clusters: Option<ClusterCount>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_toml_str(&crate::files::read_text(p)?)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        if let Some(v) = self.demand_clusters {
            cfg.demand_clusters = v;
        }
        if let Some(v) = self.solar_clusters {
            cfg.solar_clusters = v;
        }
        if let Some(v) = self.k_max {
            cfg.k_max = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Group to disaggregate; all groups when omitted.
    #[arg(long)]
    pub group: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub group: String,
    /// JSON list of events ({"at", "kind", "fraction_or_capacity", "duration_hours"}).
    #[arg(long)]
    pub events: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub group: String,
    /// Comma-separated fractions of the observed PVs to keep.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Random subsets averaged per fraction.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated demand group sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 5, 10, 20])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("btm-disagg").chain(argv.iter().copied()))
    }

    #[test]
    fn disaggregate_spec() {
        let cli = parse(&["disaggregate", "--data", "d.csv", "--groups", "g.json", "--group", "L1", "--out", "rpt/"])
            .unwrap();
        match cli.command {
            Command::Disaggregate(a) => {
                assert_eq!(a.group.as_deref(), Some("L1"));
                assert_eq!(a.data.data, PathBuf::from("d.csv"));
                assert_eq!(a.out, PathBuf::from("rpt/"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn synth_seed() {
        let cli = parse(&["synth", "--config", "c.toml", "--seed", "7", "--out", "feeder/"]).unwrap();
        match cli.command {
            Command::Synth(a) => assert_eq!(a.seed, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_verb_and_flag() {
        assert!(parse(&["frobnicate"]).is_err());
        assert!(parse(&["synth", "--out", "x", "--colour", "red"]).is_err());
        assert!(parse(&["disaggregate", "--data", "d.csv"]).is_err());
    }

    #[test]
    fn flags_override_config_defaults() {
        let cli = parse(&[
            "sweep", "--data", "d.csv", "--group", "L1", "--fractions", "1.0,0.5", "--window", "48",
            "--solar-clusters", "auto", "--demand-clusters", "2", "--out", "o",
        ])
        .unwrap();
        let Command::Sweep(a) = cli.command else { panic!() };
        assert_eq!(a.fractions, Some(vec![1.0, 0.5]));
        let cfg = a.pipeline.resolve().unwrap();
        assert_eq!(cfg.window, 48);
        assert_eq!(cfg.demand_clusters, ClusterCount::Fixed(2));
        assert_eq!(cfg.solar_clusters, ClusterCount::Auto);
    }
}
