use crate::data::PowerSeries;
use crate::error::{Error, Result};

fn check_lengths(estimate: &[f64], truth: &[f64]) -> Result<()> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "estimate vs truth",
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::ZeroTruth);
    }
    Ok(())
}

/// Mean absolute error as a percentage of the mean absolute truth.
pub fn mape(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(estimate, truth)?;
    let k = truth.len() as f64;
    let level = truth.iter().map(|v| v.abs()).sum::<f64>() / k;
    if level == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let err: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).abs()).sum();
    Ok(100.0 * err / k / level)
}

pub fn evaluate_mape(estimate: &PowerSeries, truth: &PowerSeries) -> Result<f64> {
    if !estimate.same_span(truth) {
        return Err(Error::SpanMismatch("estimate and truth cover different spans".into()));
    }
    mape(estimate.values(), truth.values())
}

/// Population variance of the per-sample error.
pub fn error_variance(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(estimate, truth)?;
    let k = truth.len() as f64;
    let errs: Vec<f64> = estimate.iter().zip(truth).map(|(e, t)| e - t).collect();
    let mean = errs.iter().sum::<f64>() / k;
    Ok(errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / k)
}
