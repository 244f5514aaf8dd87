use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the returned clustering.
    pub wcss: f64,
    /// WCSS after every center update of the winning restart.
    pub wcss_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seed(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();

    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && u < *w {
                    pick = Some(i);
                    break;
                }
                u -= w;
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|w| *w > 0.0).expect("positive total"))
        } else {
            // Only duplicates remain; take any point not yet used.
            let free: Vec<usize> = (0..n).filter(|i| !chosen[*i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let (n, k, dim) = (points.len(), centers.len(), points[0].len());
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut history = Vec::new();

    for iteration in 0..MAX_ITERATIONS {
        // Refill empty clusters with the worst-served point of a larger cluster.
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&i, &j| {
                    sq_dist(&points[i], &centers[labels[i]])
                        .total_cmp(&sq_dist(&points[j], &centers[labels[j]]))
                        .then(j.cmp(&i))
                });
            if let Some(i) = donor {
                counts[labels[i]] -= 1;
                labels[i] = empty;
                counts[empty] = 1;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (c, (sum, &count)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            if count > 0 {
                *c = sum.iter().map(|s| s / count as f64).collect();
            }
        }
        let wcss: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centers[l]))
            .sum();
        history.push(wcss);

        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == labels || iteration + 1 == MAX_ITERATIONS {
            break;
        }
        labels = next;
    }

    KMeansResult {
        wcss: *history.last().expect("at least one iteration"),
        labels,
        centers,
        wcss_history: history,
    }
}

/// k-means with k-means++ seeding; the restart with the lowest WCSS wins.
/// Deterministic for a fixed `seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(Error::TooFewProfiles { needed: 1, found: 0 });
    }
    if k == 0 || k > points.len() {
        return Err(Error::ClusterCount { k, n: points.len() });
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "k-means point",
            expected: dim,
            found: bad.len(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means points"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, plus_plus_seed(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
