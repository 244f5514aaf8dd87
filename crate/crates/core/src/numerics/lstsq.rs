use serde::{Deserialize, Serialize};

use super::eigen::symmetric_eigen;
use super::matrix::{Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Largest condition number of `XᵀX` solved without regularization.
pub const CONDITION_LIMIT: f64 = 1e10;
/// Ridge added on ill-conditioned systems, relative to `trace(XᵀX) / k`.
const RIDGE_SCALE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionFlag {
    WellConditioned,
    Regularized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresSolution {
    pub coefficients: Vec<f64>,
    /// `‖X c − y‖₂` of the returned coefficients.
    pub residual_l2: f64,
    pub condition: ConditionFlag,
}

/// Cholesky solve of an SPD system; `None` if a pivot is not positive.
fn cholesky_solve(a: &SymMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * n + i];
    }
    Some(x)
}

fn condition_number(gram: &SymMatrix) -> Result<f64> {
    let n = gram.n();
    let (hi, lo) = if n == 2 {
        let (a, b, d) = (gram.get(0, 0), gram.get(0, 1), gram.get(1, 1));
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        // Product form keeps the small eigenvalue accurate.
        let hi = mean + radius;
        let det = a * d - b * b;
        (hi, if hi > 0.0 { det / hi } else { 0.0 })
    } else {
        let e = symmetric_eigen(gram)?;
        (e.values[0], e.values[n - 1])
    };
    Ok(if lo <= 0.0 { f64::INFINITY } else { hi / lo })
}

/// Minimizes `‖X c − y‖₂` through the normal equations `XᵀX c = Xᵀy`.
///
/// When `cond(XᵀX)` exceeds [`CONDITION_LIMIT`] a ridge of
/// `1e-8 · trace(XᵀX) / k` is added to the diagonal and the solution is
/// flagged [`ConditionFlag::Regularized`].
pub fn solve_normal_equations(x: &Matrix, y: &[f64]) -> Result<LeastSquaresSolution> {
    let (t, k) = (x.rows(), x.cols());
    if y.len() != t {
        return Err(Error::DimensionMismatch {
            context: "least squares target",
            expected: t,
            found: y.len(),
        });
    }
    if k == 0 || t < k {
        return Err(Error::DimensionMismatch {
            context: "least squares design (rows >= cols >= 1)",
            expected: k.max(1),
            found: t,
        });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least squares input"));
    }
    if x.as_slice().iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroDesign);
    }

    let gram = x.gram();
    let rhs = x.t_mul_vec(y);
    let cond = condition_number(&gram)?;
    let (coefficients, condition) = match (cond <= CONDITION_LIMIT)
        .then(|| cholesky_solve(&gram, &rhs))
        .flatten()
    {
        Some(c) => (c, ConditionFlag::WellConditioned),
        None => {
            let ridge = RIDGE_SCALE * gram.trace() / k as f64;
            let c = cholesky_solve(&gram.with_added_diagonal(ridge), &rhs)
                .ok_or(Error::ZeroDesign)?;
            (c, ConditionFlag::Regularized)
        }
    };

    let fitted = x.mul_vec(&coefficients);
    let residual_l2 = fitted
        .iter()
        .zip(y)
        .map(|(f, v)| (f - v) * (f - v))
        .sum::<f64>()
        .sqrt();
    Ok(LeastSquaresSolution {
        coefficients,
        residual_l2,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(x: &Matrix, c: &[f64], y: &[f64]) -> f64 {
        x.mul_vec(c)
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_design() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = solve_normal_equations(&x, &[2.0, -3.0]).unwrap();
        assert!((s.coefficients[0] - 2.0).abs() < 1e-15);
        assert!((s.coefficients[1] + 3.0).abs() < 1e-15);
        assert!(s.residual_l2 < 1e-15);
        assert_eq!(s.condition, ConditionFlag::WellConditioned);
    }

    #[test]
    fn exact_fit_in_column_space() {
        let x = Matrix::from_rows(&[
            vec![1.0, 2.0],
            vec![0.5, -1.0],
            vec![3.0, 0.0],
            vec![-2.0, 1.5],
        ])
        .unwrap();
        let y = x.mul_vec(&[0.7, -1.3]);
        let s = solve_normal_equations(&x, &y).unwrap();
        assert!(s.residual_l2 < 1e-12);
    }

    #[test]
    fn grid_search_finds_nothing_better() {
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        let rows: Vec<Vec<f64>> = (0..96)
            .map(|_| vec![rng.random_range(0.0..3.0), rng.random_range(-2.0..0.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 2.0 * r[0] + 0.8 * r[1] + rng.random_range(-0.3..0.3))
            .collect();
        let s = solve_normal_equations(&x, &y).unwrap();

        // Brute-force oracle: scan a fine grid around the closed form.
        let (c0, c1) = (s.coefficients[0], s.coefficients[1]);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -100..=100 {
            for j in -100..=100 {
                let cand = [c0 + i as f64 * 1e-4, c1 + j as f64 * 1e-4];
                let r = residual(&x, &cand, &y);
                if r < best.0 {
                    best = (r, cand[0], cand[1]);
                }
            }
        }
        assert!(s.residual_l2 <= best.0 + 1e-12);
        assert!((best.1 - c0).abs() <= 1e-6 && (best.2 - c1).abs() <= 1e-6);
        assert!((s.residual_l2 - residual(&x, &s.coefficients, &y)).abs() <= 1e-9 * s.residual_l2);
    }

    #[test]
    fn zero_column_is_regularized() {
        let x = Matrix::from_columns(&[&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]]).unwrap();
        let s = solve_normal_equations(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(s.condition, ConditionFlag::Regularized);
        assert!((s.coefficients[0] - 2.0).abs() < 1e-6);
        assert_eq!(s.coefficients[1], 0.0);
    }

    #[test]
    fn errors() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_normal_equations(&x, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let zero = Matrix::zeros(3, 2);
        assert!(matches!(
            solve_normal_equations(&zero, &[1.0, 2.0, 3.0]),
            Err(Error::ZeroDesign)
        ));
        let wide = Matrix::zeros(1, 2);
        assert!(solve_normal_equations(&wide, &[1.0]).is_err());
    }
}
