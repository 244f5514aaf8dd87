//! Semi-supervised signal separation of one net-demand window.
//!
//! The window is fitted as `α·p^C + β·g^C` by least squares; the scaled
//! composites are the demand and solar estimates.

use serde::{Deserialize, Serialize};

use crate::data::{PowerSeries, SeriesRole};
use crate::error::{Error, Result};
use crate::numerics::{solve_normal_equations, ConditionFlag, Matrix};

/// Whether the fitted scales are physically plausible. Coefficients are
/// never clipped; implausible ones are only reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Plausible,
    /// `α ≤ 0` or `β < 0`.
    OutOfRange,
}

/// Scales and residual of one separation, without the estimate series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub alpha: f64,
    pub beta: f64,
    pub residual_l1: f64,
    pub condition: ConditionFlag,
}

impl Fit {
    pub fn quality(&self) -> Quality {
        if self.alpha <= 0.0 || self.beta < 0.0 {
            Quality::OutOfRange
        } else {
            Quality::Plausible
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationResult {
    pub alpha: f64,
    pub beta: f64,
    pub demand_hat: PowerSeries,
    /// Non-positive unless `beta < 0`, which [`Quality::OutOfRange`] flags.
    pub solar_hat: PowerSeries,
    pub net_hat: PowerSeries,
    pub residual_l1: f64,
    pub condition: ConditionFlag,
    pub quality: Quality,
}

pub fn residual_l1(estimate: &[f64], measured: &[f64]) -> Result<f64> {
    if estimate.len() != measured.len() {
        return Err(Error::DimensionMismatch {
            context: "residual",
            expected: measured.len(),
            found: estimate.len(),
        });
    }
    Ok(estimate.iter().zip(measured).map(|(a, b)| (a - b).abs()).sum())
}

/// Least-squares fit of `net ≈ α·demand + β·solar` on raw slices.
pub fn fit(demand: &[f64], solar: &[f64], net: &[f64]) -> Result<Fit> {
    let t = net.len();
    for (len, what) in [(demand.len(), "demand exemplar"), (solar.len(), "solar exemplar")] {
        if len != t {
            return Err(Error::DimensionMismatch {
                context: what,
                expected: t,
                found: len,
            });
        }
    }
    if t < 2 {
        return Err(Error::InsufficientSpan { window: 2, available: t });
    }
    let x = Matrix::from_columns(&[demand, solar])?;
    let sol = solve_normal_equations(&x, net)?;
    let (alpha, beta) = (sol.coefficients[0], sol.coefficients[1]);
    let residual_l1 = demand
        .iter()
        .zip(solar)
        .zip(net)
        .map(|((p, g), n)| (alpha * p + beta * g - n).abs())
        .sum();
    Ok(Fit {
        alpha,
        beta,
        residual_l1,
        condition: sol.condition,
    })
}

pub fn separate(p_c: &PowerSeries, g_c: &PowerSeries, p_n: &PowerSeries) -> Result<SeparationResult> {
    let f = fit(p_c.values(), g_c.values(), p_n.values())?;
    let demand: Vec<f64> = p_c.values().iter().map(|v| f.alpha * v).collect();
    let solar: Vec<f64> = g_c.values().iter().map(|v| f.beta * v).collect();
    let net: Vec<f64> = demand.iter().zip(&solar).map(|(d, s)| d + s).collect();
    let residual_l1 = residual_l1(&net, p_n.values())?;
    let start = p_n.start();
    Ok(SeparationResult {
        alpha: f.alpha,
        beta: f.beta,
        demand_hat: PowerSeries::new(start, SeriesRole::NativeDemand, demand)?,
        solar_hat: PowerSeries::from_parts_unchecked(start, SeriesRole::SolarInjection, solar),
        net_hat: PowerSeries::new(start, SeriesRole::NetDemand, net)?,
        residual_l1,
        condition: f.condition,
        quality: f.quality(),
    })
}
