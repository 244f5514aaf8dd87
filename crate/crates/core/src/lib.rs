//! Behind-the-meter solar and native demand disaggregation.
//!
//! Net-demand smart-meter series are split into native demand and rooftop
//! solar injection using exemplars learned from fully observable customers:
//!
//! 1. [`spectral`] clusters observable demand and solar profiles.
//! 2. [`exemplar`] turns cluster memberships into per-window candidate
//!    exemplars and composes them with simplex weights.
//! 3. [`sss`] separates a net-demand window into scaled composite exemplars
//!    by least squares.
//! 4. [`rgvp`] learns the composite weights online from disaggregation
//!    regrets using an exponential potential.
//! 5. [`pipeline`] drives the sliding-window stream, baselines, sweeps and
//!    scenario runs.
//!
//! Solar generation is carried internally as a non-positive *injection* so
//! that `demand + injection = net` holds literally. File formats keep
//! generation positive; conversion happens at the I/O boundary.

pub mod data;
pub mod error;
pub mod exemplar;
pub mod numerics;
pub mod pipeline;
pub mod rgvp;
pub mod spectral;
pub mod sss;

pub use data::{
    FeederDataset, MeterAttributes, MeterId, MeterKind, PowerSeries, ScenarioEvent, SeriesRole,
    SynthConfig,
};
pub use error::{Error, Result};

pub use exemplar::{CompositeExemplar, ExemplarLibrary};
pub use rgvp::{RegretUpdate, WeightState};
pub use sss::SeparationResult;
pub use pipeline::{DisaggregationReport, PipelineConfig};


