//! Candidate exemplar libraries and their weighted composition.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::{FeederDataset, MeterId, PowerSeries, SeriesRole};
use crate::error::{Error, Result};
use crate::spectral::ClusteringResult;

/// Tolerance for weight vectors to count as points of the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Meter ids of every demand and solar cluster.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub demand: Vec<Vec<MeterId>>,
    pub solar: Vec<Vec<MeterId>>,
}

/// Cluster-mean series over the whole dataset span, from which every
/// window's candidates are sliced.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePool {
    start: DateTime<Utc>,
    demand: Vec<Vec<f64>>,
    solar: Vec<Vec<f64>>,
    membership: Membership,
}

fn mean_series<'a>(members: impl ExactSizeIterator<Item = &'a PowerSeries>, len: usize) -> Vec<f64> {
    let count = members.len() as f64;
    let mut acc = vec![0.0; len];
    for s in members {
        for (a, v) in acc.iter_mut().zip(s.values()) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count);
    acc
}

impl CandidatePool {
    /// Builds the pool from member index lists into `observed_demand()` and
    /// `observed_pairs()` of `dataset`.
    pub fn from_members(
        dataset: &FeederDataset,
        demand_groups: &[Vec<usize>],
        solar_groups: &[Vec<usize>],
    ) -> Result<Self> {
        let (pd, pg) = (dataset.observed_demand(), dataset.observed_pairs());
        if demand_groups.is_empty() {
            return Err(Error::EmptyObservableSet("demand clusters"));
        }
        if solar_groups.is_empty() {
            return Err(Error::EmptyObservableSet("solar clusters"));
        }
        let check = |groups: &[Vec<usize>], available: usize| -> Result<()> {
            for (c, g) in groups.iter().enumerate() {
                if g.is_empty() {
                    return Err(Error::EmptyCluster(c));
                }
                if let Some(&i) = g.iter().find(|&&i| i >= available) {
                    return Err(Error::UnknownMeter(format!("observable index {i}")));
                }
            }
            Ok(())
        };
        check(demand_groups, pd.len())?;
        check(solar_groups, pg.len())?;

        let len = dataset.len();
        let demand = demand_groups
            .iter()
            .map(|g| mean_series(g.iter().map(|&i| &pd[i].demand), len))
            .collect();
        let solar = solar_groups
            .iter()
            .map(|g| mean_series(g.iter().map(|&i| &pg[i].injection), len))
            .collect();
        let membership = Membership {
            demand: demand_groups
                .iter()
                .map(|g| g.iter().map(|&i| pd[i].id.clone()).collect())
                .collect(),
            solar: solar_groups
                .iter()
                .map(|g| g.iter().map(|&i| pg[i].id.clone()).collect())
                .collect(),
        };
        Ok(Self {
            start: dataset.start(),
            demand,
            solar,
            membership,
        })
    }

    pub fn from_clusterings(
        dataset: &FeederDataset,
        demand: &ClusteringResult,
        solar: &ClusteringResult,
    ) -> Result<Self> {
        Self::from_members(dataset, &demand.members(), &solar.members())
    }

    pub fn demand_count(&self) -> usize {
        self.demand.len()
    }

    pub fn solar_count(&self) -> usize {
        self.solar.len()
    }

    pub fn len(&self) -> usize {
        self.demand[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    pub fn demand_window(&self, i: usize, end: usize, len: usize) -> &[f64] {
        &self.demand[i][end + 1 - len..=end]
    }

    pub fn solar_window(&self, j: usize, end: usize, len: usize) -> &[f64] {
        &self.solar[j][end + 1 - len..=end]
    }

    /// Library for the window `[end + 1 - len, end]`.
    pub fn library(&self, end: usize, len: usize) -> Result<ExemplarLibrary> {
        if len == 0 || end >= self.len() || len > end + 1 {
            return Err(Error::InsufficientSpan {
                window: len,
                available: self.len().min(end + 1),
            });
        }
        let start = self.start + PowerSeries::step() * (end + 1 - len) as i32;
        let demand_candidates = (0..self.demand.len())
            .map(|i| PowerSeries::new(start, SeriesRole::NativeDemand, self.demand_window(i, end, len).to_vec()))
            .collect::<Result<_>>()?;
        let solar_candidates = (0..self.solar.len())
            .map(|j| PowerSeries::new(start, SeriesRole::SolarInjection, self.solar_window(j, end, len).to_vec()))
            .collect::<Result<_>>()?;
        Ok(ExemplarLibrary {
            demand_candidates,
            solar_candidates,
            membership: self.membership.clone(),
        })
    }
}

/// Candidate exemplars over one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExemplarLibrary {
    pub demand_candidates: Vec<PowerSeries>,
    pub solar_candidates: Vec<PowerSeries>,
    pub membership: Membership,
}

impl ExemplarLibrary {
    /// Number of samples in the window.
    pub fn window_len(&self) -> usize {
        self.demand_candidates[0].len()
    }

    pub fn window_start(&self) -> DateTime<Utc> {
        self.demand_candidates[0].start()
    }

    pub fn validate(&self) -> Result<()> {
        if self.demand_candidates.is_empty() {
            return Err(Error::EmptyObservableSet("demand candidates"));
        }
        if self.solar_candidates.is_empty() {
            return Err(Error::EmptyObservableSet("solar candidates"));
        }
        let (start, len) = (self.window_start(), self.window_len());
        for (s, role) in self
            .demand_candidates
            .iter()
            .map(|s| (s, SeriesRole::NativeDemand))
            .chain(self.solar_candidates.iter().map(|s| (s, SeriesRole::SolarInjection)))
        {
            if s.start() != start || s.len() != len {
                return Err(Error::SpanMismatch("library candidates cover different windows".into()));
            }
            if s.role() != role {
                return Err(Error::InvalidSeries(format!("candidate has role {:?}", s.role())));
            }
            // Re-run the series checks, which deserialization skips.
            PowerSeries::new(start, role, s.values().to_vec())?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lib: Self = serde_json::from_str(text)?;
        lib.validate()?;
        Ok(lib)
    }
}

/// Library for the window `[end + 1 - len, end]` straight from clusterings.
pub fn build_candidate_library(
    dataset: &FeederDataset,
    demand: &ClusteringResult,
    solar: &ClusteringResult,
    end: usize,
    len: usize,
) -> Result<ExemplarLibrary> {
    CandidatePool::from_clusterings(dataset, demand, solar)?.library(end, len)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeExemplar {
    pub demand: PowerSeries,
    pub solar: PowerSeries,
}

pub(crate) fn check_simplex(w: &[f64], what: &str) -> Result<()> {
    let sum: f64 = w.iter().sum();
    if w.is_empty() || (sum - 1.0).abs() > SIMPLEX_TOL || w.iter().any(|&v| v < -SIMPLEX_TOL || !v.is_finite()) {
        return Err(Error::OffSimplex(format!("{what} weights {w:?}")));
    }
    Ok(())
}

/// Weighted sum of equally long slices.
pub(crate) fn combine(candidates: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; candidates[0].len()];
    for (c, &w) in candidates.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(*c) {
            *o += w * v;
        }
    }
    out
}

pub fn compose(lib: &ExemplarLibrary, omega: &[f64], theta: &[f64]) -> Result<CompositeExemplar> {
    for (w, n, what) in [
        (omega, lib.demand_candidates.len(), "demand"),
        (theta, lib.solar_candidates.len(), "solar"),
    ] {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                context: "composite weights",
                expected: n,
                found: w.len(),
            });
        }
        check_simplex(w, what)?;
    }
    let p: Vec<&[f64]> = lib.demand_candidates.iter().map(|s| s.values()).collect();
    let g: Vec<&[f64]> = lib.solar_candidates.iter().map(|s| s.values()).collect();
    let start = lib.window_start();
    Ok(CompositeExemplar {
        demand: PowerSeries::new(start, SeriesRole::NativeDemand, combine(&p, omega))?,
        solar: PowerSeries::new(start, SeriesRole::SolarInjection, combine(&g, theta).into_iter().map(|v| v.min(0.0)).collect())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_feeder, SynthConfig};
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
    }

    fn lib(demand: Vec<Vec<f64>>, solar: Vec<Vec<f64>>) -> ExemplarLibrary {
        ExemplarLibrary {
            demand_candidates: demand
                .into_iter()
                .map(|v| PowerSeries::new(t0(), SeriesRole::NativeDemand, v).unwrap())
                .collect(),
            solar_candidates: solar
                .into_iter()
                .map(|v| PowerSeries::new(t0(), SeriesRole::SolarInjection, v).unwrap())
                .collect(),
            membership: Membership::default(),
        }
    }

    fn feeder() -> FeederDataset {
        let cfg = SynthConfig {
            demand_only_customers: 6,
            observed_pv_customers: 4,
            net_only_customers: 4,
            days: 9,
            ..SynthConfig::default()
        };
        generate_synthetic_feeder(&cfg, 1).unwrap()
    }

    #[test]
    fn single_member_candidate_is_its_window() {
        let ds = feeder();
        let pool = CandidatePool::from_members(&ds, &[vec![2]], &[vec![1]]).unwrap();
        let l = pool.library(100, 24).unwrap();
        assert_eq!(l.demand_candidates[0].values(), ds.observed_demand()[2].demand.window(100, 24));
        assert_eq!(l.solar_candidates[0].values(), ds.observed_pairs()[1].injection.window(100, 24));
        assert_eq!(l.window_start(), ds.timestamp(77));
        assert_eq!(l.membership.demand, vec![vec![ds.observed_demand()[2].id.clone()]]);
    }

    #[test]
    fn candidates_match_per_sample_average() {
        let ds = feeder();
        let groups = vec![vec![0, 3, 5], vec![1, 2, 4]];
        let pool = CandidatePool::from_members(&ds, &groups, &[vec![0, 1, 2, 3]]).unwrap();
        let l = pool.library(150, 96).unwrap();
        for (c, g) in groups.iter().enumerate() {
            for k in 0..96 {
                let t = 150 + 1 - 96 + k;
                let oracle: f64 =
                    g.iter().map(|&i| ds.observed_demand()[i].demand.values()[t]).sum::<f64>() / g.len() as f64;
                assert!((l.demand_candidates[c].values()[k] - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pool_errors() {
        let ds = feeder();
        assert!(matches!(
            CandidatePool::from_members(&ds, &[vec![0], vec![]], &[vec![0]]),
            Err(Error::EmptyCluster(1))
        ));
        assert!(CandidatePool::from_members(&ds, &[vec![0]], &[]).is_err());
        assert!(CandidatePool::from_members(&ds, &[vec![99]], &[vec![0]]).is_err());
        let pool = CandidatePool::from_members(&ds, &[vec![0]], &[vec![0]]).unwrap();
        assert!(pool.library(10, 24).is_err());
        assert!(pool.library(ds.len(), 24).is_err());
    }

    #[test]
    fn mean_of_constants() {
        let l = lib(vec![vec![2.0; 4], vec![4.0; 4]], vec![vec![-1.0; 4]]);
        let c = compose(&l, &[0.5, 0.5], &[1.0]).unwrap();
        assert_eq!(c.demand.values(), &[3.0; 4]);
        let one_hot = compose(&l, &[1.0, 0.0], &[1.0]).unwrap();
        assert_eq!(one_hot.demand.values(), l.demand_candidates[0].values());
    }

    #[test]
    fn off_simplex_rejected() {
        let l = lib(vec![vec![2.0; 4], vec![4.0; 4]], vec![vec![-1.0; 4]]);
        assert!(compose(&l, &[0.6, 0.6], &[1.0]).is_err());
        assert!(compose(&l, &[1.5, -0.5], &[1.0]).is_err());
        assert!(compose(&l, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ds = feeder();
        let pool = CandidatePool::from_members(&ds, &[vec![0, 1], vec![2]], &[vec![0], vec![1, 2]]).unwrap();
        let l = pool.library(120, 48).unwrap();
        let back = ExemplarLibrary::from_json(&l.to_json().unwrap()).unwrap();
        assert_eq!(back, l);
        let tampered = l.to_json().unwrap().replacen("\"solar_injection\"", "\"native_demand\"", 1);
        assert!(ExemplarLibrary::from_json(&tampered).is_err());
    }

    fn simplex(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    }

    proptest! {
        #[test]
        fn composition_is_a_dot_product_in_the_hull(
            cands in proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, 12), 3),
            raw in proptest::collection::vec(0.01f64..1.0, 3),
        ) {
            let w = simplex(raw);
            let solar: Vec<Vec<f64>> = cands.iter().map(|c| c.iter().map(|v| -v).collect()).collect();
            let l = lib(cands.clone(), solar);
            let c = compose(&l, &w, &w).unwrap();
            for t in 0..12 {
                let dot: f64 = (0..3).map(|i| w[i] * cands[i][t]).sum();
                prop_assert!((c.demand.values()[t] - dot).abs() < 1e-12);
                prop_assert!((c.solar.values()[t] + dot).abs() < 1e-12);
                let lo = cands.iter().map(|x| x[t]).fold(f64::INFINITY, f64::min);
                let hi = cands.iter().map(|x| x[t]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(c.demand.values()[t] >= lo - 1e-12 && c.demand.values()[t] <= hi + 1e-12);
            }
        }

        #[test]
        fn composition_is_linear(
            cands in proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, 8), 2),
            a in 0.0f64..1.0,
            r1 in 0.01f64..1.0,
            r2 in 0.01f64..1.0,
        ) {
            let l = lib(cands, vec![vec![-1.0; 8]]);
            let (w1, w2) = ([r1, 1.0 - r1], [r2, 1.0 - r2]);
            let mix = [a * w1[0] + (1.0 - a) * w2[0], a * w1[1] + (1.0 - a) * w2[1]];
            let c = compose(&l, &mix, &[1.0]).unwrap();
            let c1 = compose(&l, &w1, &[1.0]).unwrap();
            let c2 = compose(&l, &w2, &[1.0]).unwrap();
            for t in 0..8 {
                let lin = a * c1.demand.values()[t] + (1.0 - a) * c2.demand.values()[t];
                prop_assert!((c.demand.values()[t] - lin).abs() < 1e-12);
            }
        }
    }
}
