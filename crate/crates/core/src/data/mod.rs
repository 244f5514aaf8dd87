//! Meter data: series, datasets, CSV ingestion, synthetic feeders,
//! behind-the-meter scenarios and correlation studies.

mod correlation;
mod dataset;
mod ingest;
mod scenario;
mod series;
mod synth;

pub use correlation::{correlation_study, pearson, CorrelationTable, PvPairCorrelation};
pub use dataset::{
    aggregate_group, aggregate_members, DemandMeter, FeederDataset, GroupAggregate, MeterAttributes, MeterId,
    NetMeter, PvMeter, Truth,
};
pub use ingest::{
    ingest_csv, ingest_reader, read_attributes, read_groups, read_meter_records, write_meter_csv, ColumnMapping,
    MeterKind, MeterRecord,
};
pub use scenario::{apply_scenario, ScenarioEvent, ScenarioKind};
pub use series::{PowerSeries, SeriesRole, STEP_HOURS};
pub use synth::{generate_synthetic_feeder, SynthConfig};
