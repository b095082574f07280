//! Heavy-traffic approximations of the overflow queue under the square-root
//! scaling `g = mu c + beta sigma sqrt(c)`.

use std::f64::consts::{PI, SQRT_2};

use crate::arrivals::ArrivalModel;
use crate::error::{FctlError, Result};
use crate::gauss_rw::{
    g_kernel, prob_zero_max, prob_zero_max_integral, series_beta_limit, GKernel,
};

/// A (beta, c, g) triple tied together by `g = mu c + beta sigma sqrt(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTrafficPoint {
    pub beta: f64,
    pub cycle: f64,
    pub green: f64,
}

/// Constants of the refined mean approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedApproxParams {
    pub a: f64,
    pub theta: f64,
    /// `b(beta) = (beta/sqrt 2) (1 + beta sigma / (mu sqrt c))^(-1/2)`
    pub b_beta: f64,
}

/// Green time for a given drift and cycle.
pub fn scaling(beta: f64, cycle: f64, model: &ArrivalModel) -> Result<HeavyTrafficPoint> {
    if !(cycle > 0.0) {
        return Err(FctlError::invalid(format!(
            "cycle {cycle} must be positive"
        )));
    }
    if !(beta > 0.0) {
        return Err(FctlError::domain(format!("beta = {beta} must be positive")));
    }
    let green = model.mean() * cycle + beta * model.std_dev() * cycle.sqrt();
    Ok(HeavyTrafficPoint { beta, cycle, green })
}

/// Cycle length for a given drift and green time, from the quadratic in `sqrt(c)`.
pub fn cycle_from_green(beta: f64, green: f64, model: &ArrivalModel) -> Result<HeavyTrafficPoint> {
    if !(beta > 0.0) {
        return Err(FctlError::domain(format!("beta = {beta} must be positive")));
    }
    if !(green > 0.0) {
        return Err(FctlError::invalid(format!(
            "green {green} must be positive"
        )));
    }
    let (mu, sigma) = (model.mean(), model.std_dev());
    let bs = beta * sigma;
    let root = (-bs + (bs * bs + 4.0 * mu * green).sqrt()) / (2.0 * mu);
    Ok(HeavyTrafficPoint {
        beta,
        cycle: root * root,
        green,
    })
}

/// Drift implied by a green time and cycle.
pub fn inverse_scaling(green: f64, cycle: f64, model: &ArrivalModel) -> Result<f64> {
    if !(cycle > 0.0) {
        return Err(FctlError::invalid(format!(
            "cycle {cycle} must be positive"
        )));
    }
    let slack = green - model.mean() * cycle;
    if !(slack > 0.0) {
        return Err(FctlError::infeasible(format!(
            "green {green} does not exceed the mean demand mu c = {}; no positive beta",
            model.mean() * cycle
        )));
    }
    Ok(slack / (model.std_dev() * cycle.sqrt()))
}

/// `a = (mu3 - mu^3 - 3 (1 + mu) sigma^2) / mu`.
pub fn a_coefficient(model: &ArrivalModel) -> f64 {
    let (mu, s2) = (model.mean(), model.variance());
    (model.third_moment() - mu.powi(3) - 3.0 * (1.0 + mu) * s2) / mu
}

/// `theta = sigma^2/(mu sqrt 2) (mu/sigma^2 + (mu/sigma^2)^2 a / 3 - 1)`.
pub fn theta(model: &ArrivalModel) -> f64 {
    let (mu, s2) = (model.mean(), model.variance());
    let r = mu / s2;
    s2 / (mu * SQRT_2) * (r + r * r * a_coefficient(model) / 3.0 - 1.0)
}

pub fn refined_params(point: &HeavyTrafficPoint, model: &ArrivalModel) -> RefinedApproxParams {
    let (mu, sigma) = (model.mean(), model.std_dev());
    let b_beta =
        point.beta / SQRT_2 / (1.0 + point.beta * sigma / (mu * point.cycle.sqrt())).sqrt();
    RefinedApproxParams {
        a: a_coefficient(model),
        theta: theta(model),
        b_beta,
    }
}

/// `(sqrt 2 / pi) sigma sqrt(c) G0(beta / sqrt 2)`.
pub fn mean_first_order(point: &HeavyTrafficPoint, model: &ArrivalModel) -> Result<f64> {
    let g0 = g_kernel(GKernel::G0, point.beta / SQRT_2)?;
    Ok(SQRT_2 / PI * model.std_dev() * point.cycle.sqrt() * g0)
}

/// `(sqrt 2/pi)(sigma sqrt c + beta sigma^2/(2 mu)) G0(b(beta)) + (theta beta / pi) G1(beta/sqrt 2)`.
pub fn mean_refined(point: &HeavyTrafficPoint, model: &ArrivalModel) -> Result<f64> {
    let params = refined_params(point, model);
    let (mu, sigma, s2) = (model.mean(), model.std_dev(), model.variance());
    let lead = SQRT_2 / PI
        * (sigma * point.cycle.sqrt() + point.beta * s2 / (2.0 * mu))
        * g_kernel(GKernel::G0, params.b_beta)?;
    let correction = params.theta * point.beta / PI * g_kernel(GKernel::G1, point.beta / SQRT_2)?;
    Ok(lead + correction)
}

/// Heavy-traffic approximation of `P(X = 0)`, namely `P(M_beta = 0)`.
pub fn p_empty_approx(beta: f64) -> Result<f64> {
    if beta >= series_beta_limit() {
        return prob_zero_max_integral(beta);
    }
    prob_zero_max(beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson() -> ArrivalModel {
        ArrivalModel::poisson(0.3).unwrap()
    }

    #[test]
    fn scaling_round_trips() {
        let m = poisson();
        let p = cycle_from_green(0.1, 10.0, &m).unwrap();
        assert!((p.cycle - 32.3).abs() < 5e-2);
        let back = scaling(0.1, p.cycle, &m).unwrap();
        assert!((back.green - 10.0).abs() < 1e-12);
        let beta = inverse_scaling(10.0, p.cycle, &m).unwrap();
        assert!((beta - 0.1).abs() < 1e-12);
        let p = cycle_from_green(1.0, 10.0, &m).unwrap();
        assert!((p.cycle - 24.3).abs() < 5e-2);
        assert!(matches!(
            inverse_scaling(0.3 * 20.0, 20.0, &m),
            Err(FctlError::Infeasible(_))
        ));
    }

    #[test]
    fn table_approximations() {
        let m = poisson();
        let p = cycle_from_green(0.1, 10.0, &m).unwrap();
        assert!((mean_first_order(&p, &m).unwrap() - 13.826).abs() < 1e-3);
        assert!((mean_refined(&p, &m).unwrap() - 13.985).abs() < 1e-3);
        let p = cycle_from_green(1.0, 10.0, &m).unwrap();
        assert!((mean_first_order(&p, &m).unwrap() - 0.3414).abs() < 1e-4);
        assert!((mean_refined(&p, &m).unwrap() - 0.4437).abs() < 1e-4);
        let p = cycle_from_green(1.0, 50.0, &m).unwrap();
        assert!((mean_refined(&p, &m).unwrap() - 0.9199).abs() < 1e-4);
    }

    #[test]
    fn poisson_theta_and_b() {
        // Poisson: mu3 = mu^3 + 3mu^2 + mu gives a = -2 and theta = (1 - 2/3 - 1)/sqrt 2
        let m = poisson();
        assert!((a_coefficient(&m) + 2.0).abs() < 1e-13);
        assert!((theta(&m) + SQRT_2 / 3.0).abs() < 1e-13);
        let p = scaling(1.0, 100.0, &m).unwrap();
        let b = refined_params(&p, &m).b_beta;
        assert!(b > 0.0 && b < 1.0 / SQRT_2);
    }

    #[test]
    fn first_order_is_scaled_walk_mean() {
        let m = poisson();
        let p = scaling(0.5, 200.0, &m).unwrap();
        let direct = mean_first_order(&p, &m).unwrap() / (m.std_dev() * p.cycle.sqrt());
        let walk = crate::gauss_rw::mean_max_g0(0.5).unwrap();
        assert!((direct - walk).abs() < 1e-12);
    }

    #[test]
    fn p_empty_switches_to_integral() {
        assert!((p_empty_approx(0.1).unwrap() - 0.1334).abs() < 5e-5);
        let big = p_empty_approx(4.0).unwrap();
        assert!(big > p_empty_approx(3.0).unwrap() && big < 1.0);
    }
}
