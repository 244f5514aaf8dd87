use crate::error::{Error, Result};
use crate::numerics::{symmetric_eigen, EigenPairs, Matrix, SymMatrix};

pub const DEFAULT_NEIGHBOR_RANK: usize = 7;
pub const SCALE_FLOOR: f64 = 1e-9;

/// Rows of the embedding with a smaller norm are left at zero.
const ROW_NORM_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    pub vertices: Vec<Vec<f64>>,
    pub weights: SymMatrix,
    /// Local scale of every vertex.
    pub scales: Vec<f64>,
    /// Set when every scale hit the floor, i.e. all profiles coincide.
    pub degenerate_scales: bool,
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn build_similarity_graph(profiles: &[Vec<f64>]) -> Result<SimilarityGraph> {
    build_similarity_graph_with_rank(profiles, DEFAULT_NEIGHBOR_RANK)
}

/// Gaussian similarity `exp(-d²/(ρi ρj))` where ρi is the distance from
/// vertex i to its `rank`-th nearest neighbour (the farthest one when there
/// are fewer neighbours).
pub fn build_similarity_graph_with_rank(
    profiles: &[Vec<f64>],
    rank: usize,
) -> Result<SimilarityGraph> {
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewProfiles { needed: 2, found: n });
    }
    if rank == 0 {
        return Err(Error::InvalidConfig("neighbour rank must be at least 1".into()));
    }
    let dim = profiles[0].len();
    if let Some(bad) = profiles.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "profile",
            expected: dim,
            found: bad.len(),
        });
    }
    if profiles.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("profiles"));
    }

    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(&profiles[i], &profiles[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let r = rank.min(n - 1);
    let scales: Vec<f64> = (0..n)
        .map(|i| {
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
            others.sort_by(f64::total_cmp);
            others[r - 1].max(SCALE_FLOOR)
        })
        .collect();
    let degenerate_scales = scales.iter().all(|&s| s == SCALE_FLOOR);

    let weights = SymMatrix::from_upper(n, |i, j| {
        if i == j {
            1.0
        } else {
            (-(dist[i][j] * dist[i][j]) / (scales[i] * scales[j])).exp()
        }
    });
    Ok(SimilarityGraph {
        vertices: profiles.to_vec(),
        weights,
        scales,
        degenerate_scales,
    })
}

/// `D^-1/2 W D^-1/2` with `D` the diagonal of row sums.
pub fn normalized_affinity(w: &SymMatrix) -> Result<SymMatrix> {
    let n = w.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = w.row(i).iter().sum();
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::ZeroRowSum(i))
            }
        })
        .collect::<Result<_>>()?;
    Ok(SymMatrix::from_upper(n, |i, j| w.get(i, j) * inv_sqrt[i] * inv_sqrt[j]))
}

/// Top-`k` eigenvectors of `l` as columns, rows scaled to unit length.
pub fn spectral_embed(l: &SymMatrix, k: usize) -> Result<Matrix> {
    if k == 0 || k > l.n() {
        return Err(Error::ClusterCount { k, n: l.n() });
    }
    Ok(embed_from_eigen(&symmetric_eigen(l)?, k))
}

pub(crate) fn embed_from_eigen(eig: &EigenPairs, k: usize) -> Matrix {
    let n = eig.vectors.rows();
    let mut e = Matrix::zeros(n, k);
    for i in 0..n {
        let row = &eig.vectors.row(i)[..k];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm >= ROW_NORM_FLOOR {
            for (j, v) in row.iter().enumerate() {
                e.set(i, j, v / norm);
            }
        }
    }
    e
}
