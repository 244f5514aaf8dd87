//! Online learning of composite weights from disaggregation regrets.
//!
//! Each window, every single candidate is tried in place of the composite
//! and the residual advantage it would have had is its instantaneous
//! regret. Cumulative regrets drive the weights through the gradient of an
//! exponential potential, which is a softmax.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::PowerSeries;
use crate::error::{Error, Result};
use crate::exemplar::{check_simplex, CompositeExemplar, ExemplarLibrary};
use crate::sss::{fit, Fit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    pub r_p: Vec<f64>,
    pub r_g: Vec<f64>,
    pub lambda_demand: f64,
    pub lambda_solar: f64,
    /// First instant whose regrets are accumulated.
    pub t0: Option<DateTime<Utc>>,
}

/// Learning rate `√(8 ln L / T)` for `L` experts over windows of `T`.
pub fn learning_rate(experts: usize, window: usize) -> f64 {
    (8.0 * (experts as f64).ln() / window as f64).sqrt()
}

pub fn init_weights(m: usize, n: usize, window: usize) -> Result<WeightState> {
    if m == 0 {
        return Err(Error::EmptyObservableSet("demand candidates"));
    }
    if n == 0 {
        return Err(Error::EmptyObservableSet("solar candidates"));
    }
    if window < 2 {
        return Err(Error::InvalidConfig(format!("window length {window} is below 2")));
    }
    Ok(WeightState {
        omega: vec![1.0 / m as f64; m],
        theta: vec![1.0 / n as f64; n],
        r_p: vec![0.0; m],
        r_g: vec![0.0; n],
        lambda_demand: learning_rate(m, window),
        lambda_solar: learning_rate(n, window),
        t0: None,
    })
}

/// `exp(λ r_i) / Σ exp(λ r_j)`, evaluated after subtracting the maximum.
pub fn softmax(r: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if r.iter().any(|v| !v.is_finite()) || !lambda.is_finite() {
        return Err(Error::NonFinite("cumulative regrets"));
    }
    let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = r.iter().map(|v| (lambda * (v - max)).exp()).collect();
    let sum: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / sum).collect())
}

/// Exponential potential `(1/λ) ln Σ exp(λ r_i)`, whose gradient is
/// [`softmax`].
pub fn exponential_potential(r: &[f64], lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig("potential needs a positive rate".into()));
    }
    if r.is_empty() || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cumulative regrets"));
    }
    let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = r.iter().map(|v| (lambda * (v - max)).exp()).sum();
    Ok(max + s.ln() / lambda)
}

impl WeightState {
    pub fn starting_at(mut self, t0: DateTime<Utc>) -> Self {
        self.t0 = Some(t0);
        self
    }

    pub fn accumulate(mut self, upd: &RegretUpdate) -> Result<WeightState> {
        for (acc, r, what) in [
            (&mut self.r_p, &upd.r_p, "demand regrets"),
            (&mut self.r_g, &upd.r_g, "solar regrets"),
        ] {
            if acc.len() != r.len() {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: acc.len(),
                    found: r.len(),
                });
            }
            acc.iter_mut().zip(r).for_each(|(a, v)| *a += v);
        }
        Ok(self)
    }

    /// Recomputes both weight vectors from the cumulative regrets. A single
    /// expert keeps weight 1.
    pub fn update_weights(mut self) -> Result<WeightState> {
        if self.omega.len() > 1 {
            self.omega = softmax(&self.r_p, self.lambda_demand)?;
        }
        if self.theta.len() > 1 {
            self.theta = softmax(&self.r_g, self.lambda_solar)?;
        }
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        check_simplex(&self.omega, "demand")?;
        check_simplex(&self.theta, "solar")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretUpdate {
    pub e_composite: f64,
    pub e_demand_candidates: Vec<f64>,
    pub e_solar_candidates: Vec<f64>,
    pub r_p: Vec<f64>,
    pub r_g: Vec<f64>,
}

impl RegretUpdate {
    pub fn from_residuals(e_composite: f64, e_demand: Vec<f64>, e_solar: Vec<f64>) -> Self {
        let r_p = e_demand.iter().map(|e| e_composite - e).collect();
        let r_g = e_solar.iter().map(|e| e_composite - e).collect();
        Self {
            e_composite,
            e_demand_candidates: e_demand,
            e_solar_candidates: e_solar,
            r_p,
            r_g,
        }
    }

    /// Divides every residual and regret by `scale`, keeping `r = e_C − e_i`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "regret scale {scale} must be positive and finite"
            )));
        }
        Ok(Self::from_residuals(
            self.e_composite / scale,
            self.e_demand_candidates.iter().map(|e| e / scale).collect(),
            self.e_solar_candidates.iter().map(|e| e / scale).collect(),
        ))
    }
}

/// Every separation of one window: the composite pair, each demand
/// candidate against the solar composite, and each solar candidate against
/// the demand composite.
#[derive(Clone, Debug, PartialEq)]
pub struct Trials {
    pub composite: Fit,
    pub demand: Vec<Fit>,
    pub solar: Vec<Fit>,
}

impl Trials {
    pub fn regrets(&self) -> RegretUpdate {
        RegretUpdate::from_residuals(
            self.composite.residual_l1,
            self.demand.iter().map(|f| f.residual_l1).collect(),
            self.solar.iter().map(|f| f.residual_l1).collect(),
        )
    }
}

pub fn run_trials(
    demand_candidates: &[&[f64]],
    solar_candidates: &[&[f64]],
    p_c: &[f64],
    g_c: &[f64],
    net: &[f64],
) -> Result<Trials> {
    Ok(Trials {
        composite: fit(p_c, g_c, net)?,
        demand: demand_candidates
            .iter()
            .map(|p| fit(p, g_c, net))
            .collect::<Result<_>>()?,
        solar: solar_candidates
            .iter()
            .map(|g| fit(p_c, g, net))
            .collect::<Result<_>>()?,
    })
}

pub fn candidate_trials(
    lib: &ExemplarLibrary,
    composite: &CompositeExemplar,
    p_n: &PowerSeries,
) -> Result<RegretUpdate> {
    let p: Vec<&[f64]> = lib.demand_candidates.iter().map(|s| s.values()).collect();
    let g: Vec<&[f64]> = lib.solar_candidates.iter().map(|s| s.values()).collect();
    Ok(run_trials(&p, &g, composite.demand.values(), composite.solar.values(), p_n.values())?.regrets())
}
