//! Sliding-window disaggregation of a customer group, with the direct
//! baseline, observability sweeps and scenario runs.

mod config;
mod metrics;
mod report;
mod scenario;
mod stream;
mod sweep;

pub use config::{ClusterCount, PipelineConfig, RegretScale};
pub use metrics::{error_variance, evaluate_mape, mape};
pub use report::{DisaggregationReport, Estimate, GroupTruth, Method, Metrics, WindowRecord};
pub use scenario::{rolling_solar_mape, scenario_run, ScenarioReport, TransitionMetrics, RECOVERY_RATIO};
pub use stream::{all_well_conditioned, run_dd_baseline, run_stream, run_with_clusters, Clusters};
pub use sweep::{sensitivity_sweep, SweepRow};
