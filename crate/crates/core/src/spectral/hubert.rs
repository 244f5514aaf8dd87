use super::graph::distance;
use crate::error::{Error, Result};

/// Modified Hubert Γ: mean over vertex pairs of the profile distance times
/// the distance between the pair's cluster centers.
pub fn hubert_gamma(profiles: &[Vec<f64>], labels: &[usize], centers: &[Vec<f64>]) -> Result<f64> {
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewProfiles { needed: 2, found: n });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "cluster labels",
            expected: n,
            found: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= centers.len()) {
        return Err(Error::InvalidConfig(format!(
            "label {bad} has no center among {}",
            centers.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] != labels[j] {
                total += distance(&profiles[i], &profiles[j])
                    * distance(&centers[labels[i]], &centers[labels[j]]);
            }
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Knee of a Γ curve given as `(k, Γ(k))` for consecutive k.
///
/// Γ rises while true groups are being separated and flattens once they
/// are, so the knee is the interior point of most negative curvature,
/// i.e. the smallest second difference. Ties go to the smaller k. Curves
/// with no interior point return their first k.
pub fn knee(curve: &[(usize, f64)]) -> Option<usize> {
    let first = curve.first()?.0;
    let mut best: Option<(usize, f64)> = None;
    for w in curve.windows(3) {
        let second = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if best.is_none_or(|(_, b)| second < b) {
            best = Some((w[1].0, second));
        }
    }
    Some(best.map_or(first, |(k, _)| k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cluster_is_zero() {
        let p = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(hubert_gamma(&p, &[0, 0, 0], &[vec![1.0]]).unwrap(), 0.0);
    }

    #[test]
    fn two_singletons() {
        let p = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        let g = hubert_gamma(&p, &[0, 1], &p).unwrap();
        assert!((g - 25.0).abs() < 1e-12);
    }

    #[test]
    fn six_point_double_loop_oracle() {
        let p: Vec<Vec<f64>> = vec![
            vec![0.0, 1.0],
            vec![0.5, 0.2],
            vec![4.0, 4.0],
            vec![4.5, 3.0],
            vec![-3.0, 2.0],
            vec![-2.5, 2.5],
        ];
        let labels = [0, 0, 1, 1, 2, 2];
        let centers: Vec<Vec<f64>> = vec![vec![0.25, 0.6], vec![4.25, 3.5], vec![-2.75, 2.25]];
        let mut sum = 0.0;
        let mut pairs = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if i < j {
                    let pd = ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt();
                    let (a, b) = (&centers[labels[i]], &centers[labels[j]]);
                    let qd = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                    sum += pd * qd;
                    pairs += 1.0;
                }
            }
        }
        let g = hubert_gamma(&p, &labels, &centers).unwrap();
        assert!((g - sum / pairs).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_labels() {
        let p = vec![vec![0.0], vec![1.0]];
        assert!(hubert_gamma(&p[..1], &[0], &[vec![0.0]]).is_err());
        assert!(hubert_gamma(&p, &[0], &[vec![0.0]]).is_err());
        assert!(hubert_gamma(&p, &[0, 2], &[vec![0.0]]).is_err());
    }

    #[test]
    fn knee_of_saturating_curve() {
        let curve = [(2, 1.0), (3, 2.0), (4, 3.0), (5, 3.1), (6, 3.2), (7, 3.3)];
        assert_eq!(knee(&curve), Some(4));
    }

    #[test]
    fn linear_curve_takes_smallest_interior() {
        let curve: Vec<(usize, f64)> = (2..8).map(|k| (k, 0.5 * k as f64)).collect();
        assert_eq!(knee(&curve), Some(3));
    }

    #[test]
    fn short_curves() {
        assert_eq!(knee(&[]), None);
        assert_eq!(knee(&[(2, 1.0), (3, 5.0)]), Some(2));
    }
}
