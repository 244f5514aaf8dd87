use super::matrix::{Matrix, SymMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Full spectrum of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Each rotation annihilates one off-diagonal pair; sweeps repeat until the
/// off-diagonal mass is negligible relative to the Frobenius norm. Vectors
/// are returned with their largest-magnitude entry positive so that results
/// are reproducible.
pub fn symmetric_eigen(m: &SymMatrix) -> Result<EigenPairs> {
    let n = m.n();
    if (0..n).any(|i| m.row(i).iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("eigen input"));
    }
    let mut a: Vec<Vec<f64>> = m.to_rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let scale = m.norm();
    let target = (f64::EPSILON * scale).powi(2);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for k in 1..n {
            if v[k][src].abs() > v[pivot][src].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot][src] < 0.0 { -1.0 } else { 1.0 };
        for (k, row) in v.iter().enumerate() {
            vectors.set(k, col, sign * row[src]);
        }
    }
    Ok(EigenPairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                vals[i * n + j] = x;
                vals[j * n + i] = x;
            }
        }
        SymMatrix::new(n, vals).unwrap()
    }

    fn reconstruct(e: &EigenPairs) -> Vec<Vec<f64>> {
        let n = e.values.len();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..n)
                    .map(|k| e.vectors.get(i, k) * e.values[k] * e.vectors.get(j, k))
                    .sum();
            }
        }
        out
    }

    #[test]
    fn identity_spectrum() {
        let e = symmetric_eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum() {
        let e = symmetric_eigen(&SymMatrix::diagonal(&[5.0, 2.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
        for k in 0..3 {
            let unit: Vec<f64> = (0..3).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            assert_eq!(e.vector(k), unit);
        }
    }

    #[test]
    fn unsorted_diagonal_is_sorted() {
        let e = symmetric_eigen(&SymMatrix::diagonal(&[2.0, 5.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vector(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(e.vector(2), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn random_six_by_six_reconstructs() {
        let m = random_symmetric(6, 42);
        let e = symmetric_eigen(&m).unwrap();
        let r = reconstruct(&e);
        for i in 0..6 {
            for j in 0..6 {
                assert!((r[i][j] - m.get(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        // SymMatrix::new already rejects NaN; build through from_upper.
        let m = SymMatrix::from_upper(2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert!(symmetric_eigen(&m).is_err());
    }

    #[test]
    fn sign_is_canonical() {
        let e = symmetric_eigen(&random_symmetric(5, 3)).unwrap();
        for k in 0..5 {
            let v = e.vector(k);
            let pivot = v
                .iter()
                .copied()
                .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(pivot > 0.0);
        }
    }

    proptest! {
        #[test]
        fn trace_residual_and_orthonormality(n in 1usize..12, seed in any::<u64>()) {
            let m = random_symmetric(n, seed);
            let e = symmetric_eigen(&m).unwrap();
            let sum: f64 = e.values.iter().sum();
            prop_assert!((sum - m.trace()).abs() <= 1e-8 * m.trace().abs().max(1.0));
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let norm = m.norm().max(1e-300);
            for k in 0..n {
                let v = e.vector(k);
                let mv = m.mul_vec(&v);
                let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - e.values[k] * b).powi(2)).sum::<f64>().sqrt();
                prop_assert!(res <= 1e-8 * norm);
                for l in 0..n {
                    let w = e.vector(l);
                    let dot: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                    let want = if k == l { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() <= 1e-8);
                }
            }
        }
    }
}
