use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Duration, TimeZone, Timelike, Utc, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{DemandMeter, FeederDataset, MeterAttributes, MeterId, NetMeter, PvMeter, Truth};
use super::series::{PowerSeries, SeriesRole};
use crate::error::{Error, Result};

/// Accepts a native TOML datetime as well as an RFC 3339 string.
fn toml_or_rfc3339<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<DateTime<Utc>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Toml(toml::value::Datetime),
    }
    let text = match Raw::deserialize(d)? {
        Raw::Text(t) => t,
        Raw::Toml(t) => t.to_string(),
    };
    DateTime::parse_from_rfc3339(&text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(serde::de::Error::custom)
}

/// Shortest span the generator accepts: two default-length windows.
const MIN_SPAN_HOURS: usize = 2 * 96;

/// Hour-of-day shape: (baseline, [(center hour, width, amplitude)]).
type Pattern = (f64, &'static [(f64, f64, f64)]);

const PATTERN_TABLE: [Pattern; 6] = [
    // evening peaker
    (0.45, &[(7.5, 1.2, 0.45), (19.0, 1.8, 1.5)]),
    // early riser
    (0.45, &[(6.5, 1.4, 1.5), (18.0, 1.6, 0.5)]),
    // late night
    (0.4, &[(23.0, 1.7, 1.4), (2.0, 1.5, 0.6)]),
    // twin peaks
    (0.5, &[(10.0, 1.2, 1.1), (21.5, 1.2, 1.1)]),
    // home during the day
    (0.55, &[(13.0, 3.2, 1.0), (20.5, 1.4, 0.35)]),
    // flat
    (0.9, &[(19.0, 3.0, 0.2)]),
];

/// Parameters of the synthetic feeder generator. Deserializes from a flat
/// key-value (TOML) file; absent keys take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Fully observable customers without PV.
    pub demand_only_customers: usize,
    /// Fully observable customers with separately metered PV.
    pub observed_pv_customers: usize,
    /// Customers with only net demand observed.
    pub net_only_customers: usize,
    /// Net-only customers per lateral group (`L1`, `L2`, ...).
    pub lateral_size: usize,
    /// Net-only customers per transformer group (`T1`, ...); 0 disables.
    pub transformer_size: usize,
    #[serde(deserialize_with = "toml_or_rfc3339")]
    pub start: DateTime<Utc>,
    pub days: usize,
    pub demand_patterns: usize,
    /// Panel azimuth offsets from due south, degrees (negative = east).
    pub orientations_deg: Vec<f64>,
    /// Orientation mix of the net-only PVs. Empty favors the orientation
    /// nearest due south three to one over each of the others.
    pub net_orientation_weights: Vec<f64>,
    /// Probability that a net-only customer owns a PV.
    pub pv_penetration: f64,
    pub capacity_min_kw: f64,
    pub capacity_max_kw: f64,
    pub demand_base_min_kw: f64,
    pub demand_base_max_kw: f64,
    /// Log-standard deviation of the hourly multiplicative demand noise.
    pub demand_noise: f64,
    /// Share of each planted pattern in a customer's daily shape; the rest
    /// is a routine common to every household. 1 keeps the patterns pure.
    pub pattern_contrast: f64,
    /// Strength of the shared cloud process, 0 = always clear sky.
    pub cloud_noise: f64,
    /// Log-standard deviation of the per-panel hourly noise.
    pub pv_noise: f64,
    pub azimuth_jitter_deg: f64,
    pub shape_exponent: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            demand_only_customers: 80,
            observed_pv_customers: 24,
            net_only_customers: 44,
            lateral_size: 22,
            transformer_size: 4,
            start: Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(),
            days: 365,
            demand_patterns: 4,
            orientations_deg: vec![-60.0, 0.0, 60.0],
            net_orientation_weights: Vec::new(),
            pv_penetration: 0.6,
            capacity_min_kw: 3.0,
            capacity_max_kw: 8.0,
            demand_base_min_kw: 0.8,
            demand_base_max_kw: 1.2,
            demand_noise: 0.25,
            pattern_contrast: 0.5,
            cloud_noise: 0.6,
            pv_noise: 0.05,
            azimuth_jitter_deg: 5.0,
            shape_exponent: 1.5,
        }
    }
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.demand_only_customers == 0
            || self.observed_pv_customers == 0
            || self.net_only_customers == 0
        {
            return bad("customer counts must be positive");
        }
        if self.lateral_size == 0 {
            return bad("lateral_size must be positive");
        }
        if self.days * 24 < MIN_SPAN_HOURS {
            return bad("span must cover at least two 96-hour windows");
        }
        if !(self.pattern_contrast > 0.0 && self.pattern_contrast <= 1.0) {
            return bad("pattern_contrast must lie in (0, 1]");
        }
        if self.demand_patterns == 0 || self.demand_patterns > PATTERN_TABLE.len() {
            return Err(Error::InvalidConfig(format!(
                "demand_patterns must be in 1..={}",
                PATTERN_TABLE.len()
            )));
        }
        if self.orientations_deg.is_empty() || self.orientations_deg.iter().any(|a| !a.is_finite())
        {
            return bad("orientations_deg must be a non-empty list of finite angles");
        }
        if !self.net_orientation_weights.is_empty() {
            if self.net_orientation_weights.len() != self.orientations_deg.len() {
                return bad("net_orientation_weights must match orientations_deg in length");
            }
            if self.net_orientation_weights.iter().any(|w| !(*w >= 0.0))
                || self.net_orientation_weights.iter().sum::<f64>() <= 0.0
            {
                return bad("net_orientation_weights must be non-negative with a positive sum");
            }
        }
        if !(0.0..=1.0).contains(&self.pv_penetration) {
            return bad("pv_penetration must lie in [0, 1]");
        }
        if !(self.capacity_min_kw > 0.0 && self.capacity_min_kw <= self.capacity_max_kw) {
            return bad("capacity range must satisfy 0 < min <= max");
        }
        if !(self.demand_base_min_kw > 0.0 && self.demand_base_min_kw <= self.demand_base_max_kw) {
            return bad("demand base range must satisfy 0 < min <= max");
        }
        for (name, v) in [
            ("demand_noise", self.demand_noise),
            ("cloud_noise", self.cloud_noise),
            ("pv_noise", self.pv_noise),
            ("azimuth_jitter_deg", self.azimuth_jitter_deg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        if self.cloud_noise > 1.0 {
            return bad("cloud_noise must lie in [0, 1]");
        }
        if !(self.shape_exponent > 0.0) {
            return bad("shape_exponent must be positive");
        }
        Ok(())
    }

    fn hours(&self) -> usize {
        self.days * 24
    }
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(24.0);
    d.min(24.0 - d)
}

/// Normalized (mean 1) hour-of-day profile of a planted demand pattern.
pub(crate) fn demand_pattern(index: usize) -> [f64; 24] {
    bump_profile(PATTERN_TABLE[index])
}

fn bump_profile((base, bumps): Pattern) -> [f64; 24] {
    let mut out = [0.0; 24];
    for (h, slot) in out.iter_mut().enumerate() {
        let x = h as f64 + 0.5;
        *slot = base
            + bumps
                .iter()
                .map(|&(c, w, a)| a * (-0.5 * (circular_gap(x, c) / w).powi(2)).exp())
                .sum::<f64>();
    }
    let mean = out.iter().sum::<f64>() / 24.0;
    out.iter_mut().for_each(|v| *v /= mean);
    out
}

/// Morning and evening peaks shared by every household.
const SHARED_ROUTINE: Pattern = (0.5, &[(7.5, 1.5, 0.6), (19.0, 2.0, 1.2)]);

/// Mean-1 mix of the shared routine and a planted pattern.
pub(crate) fn blended_pattern(index: usize, contrast: f64) -> [f64; 24] {
    let own = demand_pattern(index);
    let routine = bump_profile(SHARED_ROUTINE);
    let mut out = [0.0; 24];
    for h in 0..24 {
        out[h] = contrast * own[h] + (1.0 - contrast) * routine[h];
    }
    out
}

/// Shared calendar and weather quantities for one hour.
struct HourContext {
    hour: f64,
    half_day: f64,
    sun_peak: f64,
    demand_factor: f64,
    cloud: f64,
}

fn seasonal_phase(t: DateTime<Utc>, peak_day: f64) -> f64 {
    (2.0 * PI * (t.ordinal() as f64 - peak_day) / 365.25).cos()
}

fn daylight_bell(x: f64, half_day: f64) -> f64 {
    let rise = 12.0 - half_day;
    if x <= rise || x >= 12.0 + half_day {
        0.0
    } else {
        (PI * (x - rise) / (2.0 * half_day)).sin()
    }
}

/// Clear-sky output per kW of capacity for a panel at `azimuth_deg`.
fn clear_sky(ctx: &HourContext, azimuth_deg: f64, shape: f64) -> f64 {
    let shift = azimuth_deg / 15.0;
    let own = daylight_bell(ctx.hour, ctx.half_day);
    let shifted = daylight_bell(ctx.hour - shift, ctx.half_day);
    ctx.sun_peak * (own * shifted).powf(shape / 2.0)
}

fn lognormal_unit_mean(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    (sigma * z - 0.5 * sigma * sigma).exp()
}

fn hour_contexts(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<HourContext> {
    let mut out = Vec::with_capacity(cfg.hours());
    let mut z = 0.0_f64;
    let mut daily = 1.0;
    for i in 0..cfg.hours() {
        let t = cfg.start + Duration::hours(i as i64);
        if i == 0 || t.hour() == 0 {
            let e: f64 = StandardNormal.sample(rng);
            z = 0.6 * z + 0.8 * e;
            let u = 1.0 / (1.0 + (-1.5 * z).exp());
            daily = 1.0 - cfg.cloud_noise * u;
        }
        let cloud = if cfg.cloud_noise == 0.0 {
            1.0
        } else {
            let e: f64 = StandardNormal.sample(rng);
            (daily * (1.0 + 0.3 * cfg.cloud_noise * e)).clamp(0.0, 1.2)
        };
        let weekend = matches!(t.weekday(), Weekday::Sat | Weekday::Sun);
        out.push(HourContext {
            hour: t.hour() as f64 + 0.5,
            half_day: 6.0 + 1.75 * seasonal_phase(t, 172.0),
            sun_peak: 0.75 + 0.25 * seasonal_phase(t, 172.0),
            demand_factor: (1.0 + 0.12 * seasonal_phase(t, 15.0))
                * if weekend { 1.1 } else { 1.0 },
            cloud,
        });
    }
    out
}

struct DemandProfile {
    base: f64,
    shape: [f64; 24],
}

impl DemandProfile {
    fn draw(cfg: &SynthConfig, pattern: usize, rng: &mut ChaCha8Rng) -> Self {
        let base = rng.random_range(cfg.demand_base_min_kw..=cfg.demand_base_max_kw);
        let mut shape = blended_pattern(pattern, cfg.pattern_contrast);
        for v in shape.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *v *= (1.0 + 0.05 * e).max(0.1);
        }
        Self { base, shape }
    }

    fn series(&self, cfg: &SynthConfig, ctx: &[HourContext], rng: &mut ChaCha8Rng) -> Vec<f64> {
        ctx.iter()
            .map(|c| {
                self.base
                    * self.shape[c.hour as usize]
                    * c.demand_factor
                    * lognormal_unit_mean(rng, cfg.demand_noise)
            })
            .collect()
    }
}

struct Panel {
    azimuth_deg: f64,
    capacity_kw: f64,
}

impl Panel {
    fn draw(cfg: &SynthConfig, orientation: usize, rng: &mut ChaCha8Rng) -> Self {
        let jitter = if cfg.azimuth_jitter_deg > 0.0 {
            let e: f64 = StandardNormal.sample(rng);
            cfg.azimuth_jitter_deg * e
        } else {
            0.0
        };
        let capacity_kw = rng.random_range(cfg.capacity_min_kw..=cfg.capacity_max_kw);
        Self {
            azimuth_deg: cfg.orientations_deg[orientation] + jitter,
            capacity_kw,
        }
    }

    /// Non-positive injection series.
    fn injection(&self, cfg: &SynthConfig, ctx: &[HourContext], rng: &mut ChaCha8Rng) -> Vec<f64> {
        ctx.iter()
            .map(|c| {
                let clear = clear_sky(c, self.azimuth_deg, cfg.shape_exponent);
                if clear == 0.0 {
                    return 0.0;
                }
                let g = self.capacity_kw * clear * c.cloud * lognormal_unit_mean(rng, cfg.pv_noise);
                0.0 - g
            })
            .collect()
    }
}

fn south_leaning_mix(orientations: &[f64]) -> Vec<f64> {
    let south = orientations
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or(0, |(i, _)| i);
    (0..orientations.len())
        .map(|i| if i == south { 3.0 } else { 1.0 })
        .collect()
}

fn pick_weighted(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Generates a feeder with known ground truth. Output is a pure function of
/// `(config, seed)`.
pub fn generate_synthetic_feeder(config: &SynthConfig, seed: u64) -> Result<FeederDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = hour_contexts(config, &mut rng);
    let start = config.start;
    let n_orient = config.orientations_deg.len();
    let mut attributes: BTreeMap<MeterId, MeterAttributes> = BTreeMap::new();

    let mut observed_demand = Vec::with_capacity(config.demand_only_customers);
    for i in 0..config.demand_only_customers {
        let id = format!("P{:03}", i + 1);
        let pattern = i % config.demand_patterns;
        let profile = DemandProfile::draw(config, pattern, &mut rng);
        let demand = profile.series(config, &ctx, &mut rng);
        attributes.insert(
            id.clone(),
            MeterAttributes {
                demand_pattern: Some(pattern),
                ..Default::default()
            },
        );
        observed_demand.push(DemandMeter {
            id,
            demand: PowerSeries::new(start, SeriesRole::NativeDemand, demand)?,
        });
    }

    let mut observed_pairs = Vec::with_capacity(config.observed_pv_customers);
    for i in 0..config.observed_pv_customers {
        let id = format!("G{:03}", i + 1);
        let pattern = rng.random_range(0..config.demand_patterns);
        let profile = DemandProfile::draw(config, pattern, &mut rng);
        let panel = Panel::draw(config, i % n_orient, &mut rng);
        let demand = profile.series(config, &ctx, &mut rng);
        let injection = panel.injection(config, &ctx, &mut rng);
        attributes.insert(
            id.clone(),
            MeterAttributes {
                demand_pattern: Some(pattern),
                azimuth_deg: Some(panel.azimuth_deg),
                capacity_kw: Some(panel.capacity_kw),
            },
        );
        observed_pairs.push(PvMeter {
            id,
            demand: PowerSeries::new(start, SeriesRole::NativeDemand, demand)?,
            injection: PowerSeries::new(start, SeriesRole::SolarInjection, injection)?,
        });
    }

    let default_mix = south_leaning_mix(&config.orientations_deg);
    let mix = if config.net_orientation_weights.is_empty() {
        &default_mix
    } else {
        &config.net_orientation_weights
    };
    let mut net_only = Vec::with_capacity(config.net_only_customers);
    for i in 0..config.net_only_customers {
        let id = format!("N{:03}", i + 1);
        let pattern = rng.random_range(0..config.demand_patterns);
        let profile = DemandProfile::draw(config, pattern, &mut rng);
        let has_pv = rng.random::<f64>() < config.pv_penetration;
        let panel = has_pv.then(|| Panel::draw(config, pick_weighted(mix, &mut rng), &mut rng));
        let demand = profile.series(config, &ctx, &mut rng);
        let injection = match &panel {
            Some(p) => p.injection(config, &ctx, &mut rng),
            None => vec![0.0; ctx.len()],
        };
        let net: Vec<f64> = demand.iter().zip(&injection).map(|(d, g)| d + g).collect();
        attributes.insert(
            id.clone(),
            MeterAttributes {
                demand_pattern: Some(pattern),
                azimuth_deg: panel.as_ref().map(|p| p.azimuth_deg),
                capacity_kw: panel.as_ref().map(|p| p.capacity_kw),
            },
        );
        net_only.push(NetMeter {
            id,
            net: PowerSeries::new(start, SeriesRole::NetDemand, net)?,
            truth: Some(Truth {
                demand: PowerSeries::new(start, SeriesRole::NativeDemand, demand)?,
                injection: PowerSeries::new(start, SeriesRole::SolarInjection, injection)?,
            }),
        });
    }

    let mut groups = BTreeMap::new();
    let net_ids: Vec<MeterId> = net_only.iter().map(|m| m.id.clone()).collect();
    for (i, chunk) in net_ids.chunks(config.lateral_size).enumerate() {
        groups.insert(format!("L{}", i + 1), chunk.to_vec());
    }
    if config.transformer_size > 0 {
        for (i, chunk) in net_ids.chunks(config.transformer_size).enumerate() {
            groups.insert(format!("T{}", i + 1), chunk.to_vec());
        }
    }

    FeederDataset::new(observed_demand, observed_pairs, net_only, groups, attributes)
}
