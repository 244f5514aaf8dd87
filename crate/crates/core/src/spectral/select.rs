use serde::{Deserialize, Serialize};

use super::graph::{build_similarity_graph_with_rank, embed_from_eigen, normalized_affinity};
use super::hubert::{hubert_gamma, knee};
use super::DEFAULT_NEIGHBOR_RANK;
use crate::error::{Error, Result};
use crate::numerics::{kmeans, symmetric_eigen, EigenPairs, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Neighbour rank defining each vertex's local scale.
    pub neighbor_rank: usize,
    /// k-means restarts per cluster count.
    pub restarts: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            neighbor_rank: DEFAULT_NEIGHBOR_RANK,
            restarts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Row-normalized spectral embedding, one row per vertex.
    pub embedding: Matrix,
    /// `(k, Γ(k))` for every evaluated cluster count.
    pub gamma_curve: Vec<(usize, f64)>,
    /// Cluster means in profile space.
    pub centers: Vec<Vec<f64>>,
}

impl ClusteringResult {
    /// Vertex indices of every cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Graph matrices and Γ curve of a clustering, for offline inspection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralDump {
    pub weights: Vec<Vec<f64>>,
    pub affinity: Vec<Vec<f64>>,
    pub embedding: Vec<Vec<f64>>,
    pub gamma_curve: Vec<(usize, f64)>,
}

fn profile_centers(profiles: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = profiles[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in profiles.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().map(|v| v / c.max(1) as f64).collect())
        .collect()
}

fn spectrum(profiles: &[Vec<f64>], cfg: &SpectralConfig) -> Result<EigenPairs> {
    let g = build_similarity_graph_with_rank(profiles, cfg.neighbor_rank)?;
    symmetric_eigen(&normalized_affinity(&g.weights)?)
}

fn cluster_with(
    profiles: &[Vec<f64>],
    eig: &EigenPairs,
    k: usize,
    seed: u64,
    cfg: &SpectralConfig,
) -> Result<(ClusteringResult, f64)> {
    let embedding = embed_from_eigen(eig, k);
    let km = kmeans(&embedding.to_rows(), k, seed.wrapping_add(k as u64), cfg.restarts)?;
    let centers = profile_centers(profiles, &km.labels, k);
    let gamma = hubert_gamma(profiles, &km.labels, &centers)?;
    Ok((
        ClusteringResult {
            labels: km.labels,
            k,
            embedding,
            gamma_curve: vec![(k, gamma)],
            centers,
        },
        gamma,
    ))
}

/// Every vertex in its own cluster; used when there are no more vertices
/// than requested clusters.
pub fn identity_clustering(profiles: &[Vec<f64>]) -> ClusteringResult {
    let n = profiles.len();
    let mut embedding = Matrix::zeros(n, n);
    for i in 0..n {
        embedding.set(i, i, 1.0);
    }
    ClusteringResult {
        labels: (0..n).collect(),
        k: n,
        embedding,
        gamma_curve: Vec::new(),
        centers: profiles.to_vec(),
    }
}

/// Spectral clustering at a fixed cluster count.
pub fn cluster_fixed(
    profiles: &[Vec<f64>],
    k: usize,
    seed: u64,
    cfg: &SpectralConfig,
) -> Result<ClusteringResult> {
    if k == 0 || k > profiles.len() {
        return Err(Error::ClusterCount { k, n: profiles.len() });
    }
    let eig = spectrum(profiles, cfg)?;
    Ok(cluster_with(profiles, &eig, k, seed, cfg)?.0)
}

pub fn select_cluster_count(profiles: &[Vec<f64>], k_max: usize, seed: u64) -> Result<ClusteringResult> {
    select_cluster_count_with(profiles, k_max, seed, &SpectralConfig::default())
}

/// Clusters for every k in `2..=k_max` and keeps the knee of the Γ curve.
pub fn select_cluster_count_with(
    profiles: &[Vec<f64>],
    k_max: usize,
    seed: u64,
    cfg: &SpectralConfig,
) -> Result<ClusteringResult> {
    let n = profiles.len();
    if k_max < 2 || k_max + 1 > n {
        return Err(Error::ClusterCount { k: k_max, n });
    }
    let eig = spectrum(profiles, cfg)?;
    let runs: Vec<ClusteringResult> = (2..=k_max)
        .map(|k| cluster_with(profiles, &eig, k, seed, cfg).map(|r| r.0))
        .collect::<Result<_>>()?;
    let curve: Vec<(usize, f64)> = runs.iter().map(|r| r.gamma_curve[0]).collect();
    let k = knee(&curve).expect("non-empty curve");
    let mut chosen = runs.into_iter().find(|r| r.k == k).expect("knee lies on the curve");
    chosen.gamma_curve = curve;
    Ok(chosen)
}

pub fn debug_dump(
    profiles: &[Vec<f64>],
    result: &ClusteringResult,
    cfg: &SpectralConfig,
) -> Result<SpectralDump> {
    let g = build_similarity_graph_with_rank(profiles, cfg.neighbor_rank)?;
    let l = normalized_affinity(&g.weights)?;
    Ok(SpectralDump {
        weights: g.weights.to_rows(),
        affinity: l.to_rows(),
        embedding: result.embedding.to_rows(),
        gamma_curve: result.gamma_curve.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planted(groups: usize, per: usize, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for g in 0..groups {
            for _ in 0..per {
                let p: Vec<f64> = (0..24)
                    .map(|h| {
                        let phase = (h as f64 - 4.0 * g as f64) / 3.0;
                        (-phase * phase).exp() + noise * rng.random_range(-1.0..1.0)
                    })
                    .collect();
                pts.push(p);
                truth.push(g);
            }
        }
        (pts, truth)
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn recovers_planted_partition_at_true_k() {
        let (pts, truth) = planted(3, 8, 0.02, 1);
        let r = cluster_fixed(&pts, 3, 0, &SpectralConfig::default()).unwrap();
        assert!(same_partition(&r.labels, &truth));
        assert!(r.members().iter().all(|m| !m.is_empty()));
    }

    #[test]
    fn knee_finds_planted_count() {
        for groups in [3, 4] {
            let (pts, truth) = planted(groups, 10, 0.02, 7);
            let r = select_cluster_count(&pts, 8, 11).unwrap();
            assert_eq!(r.k, groups);
            assert_eq!(r.gamma_curve.len(), 7);
            assert!(same_partition(&r.labels, &truth));
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (pts, _) = planted(4, 6, 0.1, 2);
        assert_eq!(
            select_cluster_count(&pts, 6, 5).unwrap(),
            select_cluster_count(&pts, 6, 5).unwrap()
        );
    }

    #[test]
    fn k_max_bounds() {
        let (pts, _) = planted(2, 3, 0.1, 2);
        assert!(select_cluster_count(&pts, 6, 0).is_err());
        assert!(select_cluster_count(&pts, 1, 0).is_err());
        assert!(select_cluster_count(&pts, 5, 0).is_ok());
    }

    #[test]
    fn identity_clusters_every_vertex() {
        let r = identity_clustering(&[vec![1.0], vec![2.0]]);
        assert_eq!(r.labels, vec![0, 1]);
        assert_eq!(r.centers, vec![vec![1.0], vec![2.0]]);
    }

    #[test]
    fn dump_serializes() {
        let (pts, _) = planted(2, 4, 0.05, 3);
        let cfg = SpectralConfig::default();
        let r = select_cluster_count_with(&pts, 4, 1, &cfg).unwrap();
        let d = debug_dump(&pts, &r, &cfg).unwrap();
        assert_eq!(d.weights.len(), 8);
        assert!(serde_json::to_string(&d).unwrap().contains("gamma_curve"));
    }
}
