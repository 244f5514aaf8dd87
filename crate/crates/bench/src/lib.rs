//! Fixtures shared by the benchmarks.

use btm_disagg::data::generate_synthetic_feeder;
use btm_disagg::numerics::SymMatrix;
use btm_disagg::{FeederDataset, PowerSeries, SeriesRole, SynthConfig};

/// The default synthetic feeder: one year of hourly samples.
pub fn year_feeder(seed: u64) -> FeederDataset {
    generate_synthetic_feeder(&SynthConfig::default(), seed).expect("default config is valid")
}

/// Demand, generation and net windows of length `t` from the first lateral.
pub fn window(ds: &FeederDataset, t: usize) -> (PowerSeries, PowerSeries, PowerSeries) {
    let start = ds.start();
    let take = |role, v: &[f64]| PowerSeries::new(start, role, v[..t].to_vec()).unwrap();
    let pv = &ds.observed_pairs()[0];
    let net = ds.net_only()[0].net.values();
    (
        take(SeriesRole::NativeDemand, ds.observed_demand()[0].demand.values()),
        take(SeriesRole::SolarInjection, pv.injection.values()),
        take(SeriesRole::NetDemand, net),
    )
}

/// A dense symmetric `n × n` matrix with a spread spectrum.
pub fn sym_matrix(n: usize) -> SymMatrix {
    SymMatrix::from_upper(n, |i, j| {
        let d = (i as f64 - j as f64).abs();
        if i == j {
            1.0 + i as f64 / n as f64
        } else {
            (-d / 4.0).exp() * ((i * 7 + j * 3) % 11) as f64 / 11.0
        }
    })
}
