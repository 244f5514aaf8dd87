use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectral::{SpectralConfig, DEFAULT_NEIGHBOR_RANK};

/// Number of clusters to form: fixed, or calibrated from the Γ knee.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterCount {
    Auto,
    Fixed(usize),
}

impl fmt::Display for ClusterCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterCount::Auto => f.write_str("auto"),
            ClusterCount::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for ClusterCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ClusterCount::Auto);
        }
        s.parse()
            .map(ClusterCount::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("cluster count {s:?} is neither a number nor \"auto\"")))
    }
}

impl Serialize for ClusterCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ClusterCount::Auto => s.serialize_str("auto"),
            ClusterCount::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(k) => Ok(ClusterCount::Fixed(k)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Units of the regrets fed to the weight update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretScale {
    /// Residuals divided by the window's `‖pⁿ‖₁`, so regrets are dimensionless.
    #[default]
    NetL1,
    /// Residuals in kW.
    Raw,
}

/// Run parameters. Every key is optional in the flat TOML form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Window length T in samples.
    pub window: usize,
    pub stride: usize,
    pub demand_clusters: ClusterCount,
    pub solar_clusters: ClusterCount,
    /// Largest cluster count tried when a count is `auto`.
    pub k_max: usize,
    pub seed: u64,
    pub kmeans_restarts: usize,
    pub neighbor_rank: usize,
    /// Fractions of the observed PVs kept in a sensitivity sweep.
    pub observability_fractions: Vec<f64>,
    /// Random subsets averaged per sweep fraction.
    pub sweep_repeats: usize,
    pub regret_scale: RegretScale,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: 96,
            stride: 1,
            demand_clusters: ClusterCount::Auto,
            solar_clusters: ClusterCount::Auto,
            k_max: 8,
            seed: 0,
            kmeans_restarts: 10,
            neighbor_rank: DEFAULT_NEIGHBOR_RANK,
            observability_fractions: vec![0.1, 0.25, 0.5, 1.0],
            sweep_repeats: 5,
            regret_scale: RegretScale::NetL1,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_clusters(mut self, demand: ClusterCount, solar: ClusterCount) -> Self {
        self.demand_clusters = demand;
        self.solar_clusters = solar;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.window < 2 {
            return bad(format!("window length {} is below 2", self.window));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        let auto = [self.demand_clusters, self.solar_clusters].contains(&ClusterCount::Auto);
        if auto && self.k_max < 3 {
            return bad(format!("k_max {} is below 3", self.k_max));
        }
        if [self.demand_clusters, self.solar_clusters].contains(&ClusterCount::Fixed(0)) {
            return bad("cluster counts must be positive".into());
        }
        if self.kmeans_restarts == 0 || self.neighbor_rank == 0 {
            return bad("kmeans_restarts and neighbor_rank must be positive".into());
        }
        if let Some(f) = self.observability_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("observability fraction {f} is outside (0, 1]"));
        }
        if self.sweep_repeats == 0 {
            return bad("sweep_repeats must be positive".into());
        }
        Ok(())
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            neighbor_rank: self.neighbor_rank,
            restarts: self.kmeans_restarts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.window, 96);
        assert_eq!(cfg.stride, 1);
    }

    #[test]
    fn flat_toml() {
        let cfg = PipelineConfig::from_toml_str(
            "window = 48\ndemand_clusters = 4\nsolar_clusters = \"auto\"\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.window, 48);
        assert_eq!(cfg.demand_clusters, ClusterCount::Fixed(4));
        assert_eq!(cfg.solar_clusters, ClusterCount::Auto);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "window = 1",
            "stride = 0",
            "k_max = 2",
            "demand_clusters = 0",
            "observability_fractions = [0.0]",
            "observability_fractions = [1.5]",
            "demand_clusters = \"many\"",
            "unknown = 1",
        ] {
            assert!(PipelineConfig::from_toml_str(text).is_err(), "{text}");
        }
        assert!(PipelineConfig::from_toml_str("k_max = 2\ndemand_clusters = 4\nsolar_clusters = 3").is_ok());
    }
}
