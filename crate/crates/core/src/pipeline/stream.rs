use std::time::Instant;

use super::config::{ClusterCount, PipelineConfig, RegretScale};
use super::metrics::mape;
use super::report::{DisaggregationReport, Estimate, GroupTruth, Method, Metrics, WindowRecord};
use crate::data::{aggregate_group, FeederDataset, GroupAggregate};
use crate::error::{Error, Result};
use crate::exemplar::{combine, CandidatePool};
use crate::numerics::ConditionFlag;
use crate::rgvp::{init_weights, run_trials};
use crate::spectral::{
    cluster_fixed, demand_profiles, identity_clustering, select_cluster_count_with, solar_profiles,
    ClusteringResult, SpectralConfig,
};
use crate::sss::{fit, Fit};

fn cluster(
    profiles: &[Vec<f64>],
    count: ClusterCount,
    k_max: usize,
    seed: u64,
    spectral: &SpectralConfig,
) -> Result<ClusteringResult> {
    let n = profiles.len();
    match count {
        ClusterCount::Fixed(k) if k >= n => Ok(identity_clustering(profiles)),
        ClusterCount::Fixed(k) => cluster_fixed(profiles, k, seed, spectral),
        ClusterCount::Auto if n <= 2 => Ok(identity_clustering(profiles)),
        ClusterCount::Auto => select_cluster_count_with(profiles, k_max.min(n - 1), seed, spectral),
    }
}

/// Clusterings of the observable customers and the candidate pool they
/// define. `pv_subset` restricts the observed PVs (indices into
/// `observed_pairs()`).
#[derive(Clone, Debug)]
pub struct Clusters {
    pub demand: ClusteringResult,
    pub solar: ClusteringResult,
    pub pool: CandidatePool,
}

impl Clusters {
    pub fn build(dataset: &FeederDataset, cfg: &PipelineConfig, pv_subset: Option<&[usize]>) -> Result<Self> {
        if dataset.observed_demand().is_empty() {
            return Err(Error::EmptyObservableSet("demand-only customers"));
        }
        let all: Vec<usize> = (0..dataset.observed_pairs().len()).collect();
        let pvs = pv_subset.unwrap_or(&all);
        if pvs.is_empty() {
            return Err(Error::EmptyObservableSet("observed PV customers"));
        }
        let spectral = cfg.spectral();
        let (_, dp) = demand_profiles(dataset);
        let (_, sp) = solar_profiles(dataset);
        let sp: Vec<Vec<f64>> = pvs.iter().map(|&i| sp[i].clone()).collect();

        let demand = cluster(&dp, cfg.demand_clusters, cfg.k_max, cfg.seed, &spectral)?;
        let solar = cluster(&sp, cfg.solar_clusters, cfg.k_max, cfg.seed, &spectral)?;
        let solar_groups: Vec<Vec<usize>> = solar
            .members()
            .into_iter()
            .map(|g| g.into_iter().map(|i| pvs[i]).collect())
            .collect();
        let pool = CandidatePool::from_members(dataset, &demand.members(), &solar_groups)?;
        Ok(Self { demand, solar, pool })
    }
}

fn window_ends(len: usize, cfg: &PipelineConfig) -> Result<impl Iterator<Item = usize>> {
    if len < cfg.window {
        return Err(Error::InsufficientSpan {
            window: cfg.window,
            available: len,
        });
    }
    Ok((cfg.window - 1..len).step_by(cfg.stride))
}

fn metrics(estimates: &[Option<Estimate>], net: &[f64], truth: Option<&GroupTruth>) -> Result<Metrics> {
    let idx: Vec<usize> = (0..estimates.len()).filter(|&i| estimates[i].is_some()).collect();
    let pick = |f: &dyn Fn(&Estimate) -> f64| -> Vec<f64> {
        idx.iter().map(|&i| f(estimates[i].as_ref().expect("filtered"))).collect()
    };
    let at = |v: &[f64]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };
    let truth_mape = |est: Vec<f64>, truth: &[f64]| -> Result<Option<f64>> {
        match mape(&est, &at(truth)) {
            Ok(m) => Ok(Some(m)),
            Err(Error::ZeroTruth) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(Metrics {
        samples: idx.len(),
        mape_net: mape(&pick(&|e| e.net), &at(net))?,
        mape_demand: truth.map(|t| truth_mape(pick(&|e| e.demand), &t.demand)).transpose()?.flatten(),
        mape_solar: truth.map(|t| truth_mape(pick(&|e| e.solar), &t.solar)).transpose()?.flatten(),
    })
}

fn group_truth(agg: &GroupAggregate) -> Option<GroupTruth> {
    agg.truth.as_ref().map(|t| GroupTruth {
        demand: t.demand.values().to_vec(),
        solar: t.injection.values().to_vec(),
    })
}

fn one_hot(len: usize, at: usize) -> Vec<f64> {
    (0..len).map(|i| if i == at { 1.0 } else { 0.0 }).collect()
}

/// Runs the learner (or the direct baseline) over every window of the
/// group's net demand with an already clustered candidate pool.
pub fn run_with_clusters(
    dataset: &FeederDataset,
    group: &str,
    cfg: &PipelineConfig,
    clusters: &Clusters,
    method: Method,
) -> Result<DisaggregationReport> {
    let started = Instant::now();
    cfg.validate()?;
    let agg = aggregate_group(dataset, group)?;
    let net = agg.net.values();
    let len = net.len();
    let t_len = cfg.window;
    let pool = &clusters.pool;
    let (m, n) = (pool.demand_count(), pool.solar_count());

    let mut state = init_weights(m, n, t_len)?.starting_at(dataset.timestamp(t_len - 1));
    let mut estimates: Vec<Option<Estimate>> = vec![None; len];
    let mut windows = Vec::new();

    for end in window_ends(len, cfg)? {
        let p: Vec<&[f64]> = (0..m).map(|i| pool.demand_window(i, end, t_len)).collect();
        let g: Vec<&[f64]> = (0..n).map(|j| pool.solar_window(j, end, t_len)).collect();
        let y = &net[end + 1 - t_len..=end];
        let reach = (end + cfg.stride).min(len);

        let (fitted, omega, theta, pair, demand_trials, solar_trials);
        match method {
            Method::Rgvp => {
                let p_c = combine(&p, &state.omega);
                let g_c = combine(&g, &state.theta);
                let trials = run_trials(&p, &g, &p_c, &g_c, y)?;
                fitted = trials.composite;
                (omega, theta, pair) = (state.omega.clone(), state.theta.clone(), None);
                let update = match cfg.regret_scale {
                    RegretScale::Raw => trials.regrets(),
                    RegretScale::NetL1 => {
                        let norm: f64 = y.iter().map(|v| v.abs()).sum();
                        if norm > 0.0 {
                            trials.regrets().scaled(norm)?
                        } else {
                            trials.regrets()
                        }
                    }
                };
                state = state.accumulate(&update)?.update_weights()?;
                (demand_trials, solar_trials) = (trials.demand, trials.solar);
            }
            Method::DirectDisaggregation => {
                let mut best: Option<(Fit, usize, usize)> = None;
                for (i, pi) in p.iter().enumerate() {
                    for (j, gj) in g.iter().enumerate() {
                        let f = fit(pi, gj, y)?;
                        if best.as_ref().is_none_or(|b| f.residual_l1 < b.0.residual_l1) {
                            best = Some((f, i, j));
                        }
                    }
                }
                let (f, i, j) = best.expect("at least one candidate pair");
                fitted = f;
                (omega, theta, pair) = (one_hot(m, i), one_hot(n, j), Some((i, j)));
                let p_c = combine(&p, &omega);
                let g_c = combine(&g, &theta);
                let trials = run_trials(&p, &g, &p_c, &g_c, y)?;
                (demand_trials, solar_trials) = (trials.demand, trials.solar);
            }
        }

        for (tau, slot) in estimates.iter_mut().enumerate().take(reach).skip(end) {
            let pc: f64 = (0..m).map(|i| omega[i] * pool.demand_window(i, tau, 1)[0]).sum();
            let gc: f64 = (0..n).map(|j| theta[j] * pool.solar_window(j, tau, 1)[0]).sum();
            let (demand, solar) = (fitted.alpha * pc, fitted.beta * gc);
            *slot = Some(Estimate {
                demand,
                solar,
                net: demand + solar,
                candidate_demand: (0..m)
                    .map(|i| demand_trials[i].alpha * pool.demand_window(i, tau, 1)[0])
                    .collect(),
                candidate_solar: (0..n)
                    .map(|j| solar_trials[j].beta * pool.solar_window(j, tau, 1)[0])
                    .collect(),
            });
        }

        windows.push(WindowRecord {
            end,
            alpha: fitted.alpha,
            beta: fitted.beta,
            residual_l1: fitted.residual_l1,
            condition: fitted.condition,
            quality: fitted.quality(),
            omega,
            theta,
            cum_regret_demand: state.r_p.clone(),
            cum_regret_solar: state.r_g.clone(),
            pair,
        });
    }

    let truth = group_truth(&agg);
    let metrics = metrics(&estimates, net, truth.as_ref())?;
    Ok(DisaggregationReport {
        group: group.to_string(),
        method,
        start: dataset.start(),
        window: t_len,
        stride: cfg.stride,
        membership: pool.membership().clone(),
        estimates,
        net_measured: net.to_vec(),
        truth,
        windows,
        metrics,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

fn run(dataset: &FeederDataset, group: &str, cfg: &PipelineConfig, method: Method) -> Result<DisaggregationReport> {
    let started = Instant::now();
    cfg.validate()?;
    let len = aggregate_group(dataset, group)?.net.len();
    if len < cfg.window {
        return Err(Error::InsufficientSpan {
            window: cfg.window,
            available: len,
        });
    }
    let clusters = Clusters::build(dataset, cfg, None)?;
    let mut report = run_with_clusters(dataset, group, cfg, &clusters, method)?;
    report.runtime_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Clusters the observable customers, then streams the group's windows
/// through separation and weight learning.
pub fn run_stream(dataset: &FeederDataset, group: &str, cfg: &PipelineConfig) -> Result<DisaggregationReport> {
    run(dataset, group, cfg, Method::Rgvp)
}

/// Per window, the candidate pair with the smallest net-demand residual.
pub fn run_dd_baseline(dataset: &FeederDataset, group: &str, cfg: &PipelineConfig) -> Result<DisaggregationReport> {
    run(dataset, group, cfg, Method::DirectDisaggregation)
}

/// True when every window's fit was solved without regularization.
pub fn all_well_conditioned(report: &DisaggregationReport) -> bool {
    report.windows.iter().all(|w| w.condition == ConditionFlag::WellConditioned)
}
