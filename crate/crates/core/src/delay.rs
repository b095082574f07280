//! Mean vehicle delay and the Webster baseline.
//!
//! Delays are measured in slots.

use serde::{Deserialize, Serialize};

use crate::allocation::{check_greens, AllocationMethod, AllocationResult, IntersectionSpec};
use crate::arrivals::ArrivalModel;
use crate::error::{FctlError, Result};
use crate::gauss_rw::{g_kernel, GKernel};
use crate::transform::FctlInstance;

/// Algebraic form used for Webster's delay approximation.
///
/// The printed form divides the uniform-delay term by `1 - rho` and uses
/// `rho c^2 / (2 g (g - mu c))` as the random term. It does not reproduce the
/// published delay values (about 148.7 instead of 33.57 for mu = 0.3,
/// c = 100, g = 35.625), so the classical form is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WebsterForm {
    #[default]
    Classical,
    Printed,
}

/// Per-lane and vehicle-averaged mean delays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub method: AllocationMethod,
    pub lane_delays: Vec<f64>,
    /// Average over vehicles: lanes weighted by `mu_i / sum mu_j`.
    pub aggregate: f64,
}

/// Mean delay from the mean overflow queue:
/// `(c-g)/(2 c mu (1-mu)) (sigma^2/(1-mu) + (c-g) mu + 2 E[X])`.
pub fn mean_delay(inst: &FctlInstance, mean_overflow: f64) -> Result<f64> {
    delay_from_overflow(
        inst.arrival(),
        inst.green().mean(),
        inst.cycle(),
        mean_overflow,
    )
}

pub(crate) fn delay_from_overflow(
    model: &ArrivalModel,
    green: f64,
    cycle: f64,
    ex: f64,
) -> Result<f64> {
    let (mu, s2) = (model.mean(), model.variance());
    if mu >= 1.0 {
        return Err(FctlError::domain(format!(
            "mean arrivals {mu} per slot must be below 1"
        )));
    }
    if !(ex >= 0.0) {
        return Err(FctlError::invalid(format!(
            "mean overflow {ex} must be non-negative"
        )));
    }
    let red = cycle - green;
    Ok(red / (2.0 * cycle * mu * (1.0 - mu)) * (s2 / (1.0 - mu) + red * mu + 2.0 * ex))
}

/// Webster's delay approximation for a lane with `mu` arrivals per slot.
pub fn webster_delay(mu: f64, cycle: f64, green: f64, form: WebsterForm) -> Result<f64> {
    if !(mu > 0.0) || !(green > 0.0) || !(cycle >= green) {
        return Err(FctlError::invalid(format!(
            "need mu > 0 and 0 < g <= c (mu = {mu}, g = {green}, c = {cycle})"
        )));
    }
    let rho = mu * cycle / green;
    if rho >= 1.0 {
        return Err(FctlError::domain(format!(
            "rho = mu c / g = {rho:.6} must be below 1"
        )));
    }
    let red = cycle - green;
    let correction =
        0.65 * (cycle / (mu * mu)).powf(1.0 / 3.0) * rho.powf(2.0 + 5.0 * green / cycle);
    let delay = match form {
        WebsterForm::Classical => {
            red * red / (2.0 * cycle * (1.0 - mu)) + rho * rho / (2.0 * mu * (1.0 - rho))
        }
        WebsterForm::Printed => {
            red * red / (2.0 * cycle * (1.0 - rho))
                + rho * cycle * cycle / (2.0 * green * (green - mu * cycle))
        }
    };
    Ok(delay - correction)
}

/// Greens proportional to arrival rates: `g_i = mu_i / mu_T (c - r_T)`.
pub fn webster_allocation(spec: &IntersectionSpec) -> Result<AllocationResult> {
    let total = spec.total_load();
    let greens: Vec<f64> = spec
        .lanes()
        .iter()
        .map(|l| l.arrival.mean() * spec.green_budget() / total)
        .collect();
    check_greens(spec, &greens)?;
    let betas = spec.betas_from_greens(&greens);
    let root = (2.0 * spec.cycle()).sqrt();
    let mut objective_estimate = 0.0;
    for (lane, &beta) in spec.lanes().iter().zip(&betas) {
        objective_estimate += lane.arrival.std_dev() / std::f64::consts::PI
            * root
            * g_kernel(GKernel::G0, beta / std::f64::consts::SQRT_2)?;
    }
    Ok(AllocationResult {
        method: AllocationMethod::Webster,
        betas,
        greens,
        objective_estimate,
        lambda: None,
        pinned: Vec::new(),
    })
}

/// `mu_T c / (c - r_T)`, common to all lanes under the proportional rule.
pub fn webster_saturation(spec: &IntersectionSpec) -> f64 {
    spec.total_load() * spec.cycle() / spec.green_budget()
}

/// Per-lane mean delays for the given greens and mean overflow queues, with
/// the vehicle-averaged aggregate.
pub fn intersection_delay(
    spec: &IntersectionSpec,
    method: AllocationMethod,
    greens: &[f64],
    means: &[f64],
) -> Result<DelayReport> {
    let n = spec.lanes().len();
    if greens.len() != n || means.len() != n {
        return Err(FctlError::invalid(format!(
            "{n} lanes but {} greens and {} mean overflows",
            greens.len(),
            means.len()
        )));
    }
    let mut lane_delays = Vec::with_capacity(n);
    for (i, ((lane, &g), &ex)) in spec.lanes().iter().zip(greens).zip(means).enumerate() {
        let d = delay_from_overflow(&lane.arrival, g, spec.cycle(), ex)
            .map_err(|e| FctlError::invalid(format!("lane {i}: {e}")))?;
        lane_delays.push(d);
    }
    let total = spec.total_load();
    let aggregate = spec
        .lanes()
        .iter()
        .zip(&lane_delays)
        .map(|(l, d)| l.arrival.mean() / total * d)
        .sum();
    Ok(DelayReport {
        method,
        lane_delays,
        aggregate,
    })
}
