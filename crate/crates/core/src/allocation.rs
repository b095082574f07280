//! Green-time allocation for an intersection whose lanes share one cycle.
//!
//! Every rule splits the slack `c (1 - mu_T) - r_T` among the lanes through
//! per-lane drifts `beta_i`, with greens `g_i = mu_i c + beta_i sigma_i sqrt(c)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::arrivals::ArrivalModel;
use crate::error::{FctlError, Result};
use crate::gauss_rw::{g_kernel, GKernel, MIN_B};
use crate::ht_approx::{mean_refined, theta, HeavyTrafficPoint};
use crate::transform::{mean_overflow, FctlInstance, GreenTime};

/// Upper end of the `b` range used when inverting `G0'`.
pub const MAX_B: f64 = 20.0;

/// One approach lane: its arrivals and its weight in the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    pub arrival: ArrivalModel,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl LaneSpec {
    pub fn new(arrival: ArrivalModel, weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(FctlError::invalid(format!(
                "lane weight {weight} must be positive"
            )));
        }
        Ok(Self { arrival, weight })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntersection {
    lanes: Vec<LaneSpec>,
    cycle: f64,
    #[serde(default)]
    lost_time: f64,
}

/// Lanes served in turn within a cycle of `cycle` slots, `lost_time` of which
/// are unavailable as green.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntersection")]
pub struct IntersectionSpec {
    lanes: Vec<LaneSpec>,
    cycle: f64,
    lost_time: f64,
}

impl TryFrom<RawIntersection> for IntersectionSpec {
    type Error = FctlError;
    fn try_from(raw: RawIntersection) -> Result<Self> {
        for (i, lane) in raw.lanes.iter().enumerate() {
            if !(lane.weight > 0.0) || !lane.weight.is_finite() {
                return Err(FctlError::invalid(format!(
                    "lane {i}: weight {} must be positive",
                    lane.weight
                )));
            }
        }
        IntersectionSpec::new(raw.lanes, raw.cycle, raw.lost_time)
    }
}

impl IntersectionSpec {
    /// Validates the lanes and the feasibility condition `c (1 - mu_T) - r_T > 0`.
    pub fn new(lanes: Vec<LaneSpec>, cycle: f64, lost_time: f64) -> Result<Self> {
        if lanes.is_empty() {
            return Err(FctlError::invalid(
                "an intersection needs at least one lane",
            ));
        }
        if !(cycle > 0.0) || !cycle.is_finite() {
            return Err(FctlError::invalid(format!(
                "cycle {cycle} must be positive"
            )));
        }
        if !(lost_time >= 0.0) || !lost_time.is_finite() {
            return Err(FctlError::invalid(format!(
                "lost time {lost_time} must be non-negative"
            )));
        }
        let spec = Self {
            lanes,
            cycle,
            lost_time,
        };
        let slack = spec.slack();
        if !(slack > 0.0) {
            return Err(FctlError::infeasible(format!(
                "c (1 - mu_T) - r_T = {slack:.6} is not positive (c = {cycle}, mu_T = {:.6}, r_T = {lost_time})",
                spec.total_load()
            )));
        }
        Ok(spec)
    }

    pub fn lanes(&self) -> &[LaneSpec] {
        &self.lanes
    }

    pub fn cycle(&self) -> f64 {
        self.cycle
    }

    pub fn lost_time(&self) -> f64 {
        self.lost_time
    }

    /// Same lanes and lost time with a different cycle.
    pub fn with_cycle(&self, cycle: f64) -> Result<Self> {
        Self::new(self.lanes.clone(), cycle, self.lost_time)
    }

    /// `mu_T = sum mu_i`.
    pub fn total_load(&self) -> f64 {
        self.lanes.iter().map(|l| l.arrival.mean()).sum()
    }

    /// `c (1 - mu_T) - r_T`, the green time left after serving the mean demand.
    pub fn slack(&self) -> f64 {
        self.cycle * (1.0 - self.total_load()) - self.lost_time
    }

    /// Total green time `c - r_T`.
    pub fn green_budget(&self) -> f64 {
        self.cycle - self.lost_time
    }

    fn sigmas(&self) -> Vec<f64> {
        self.lanes.iter().map(|l| l.arrival.std_dev()).collect()
    }

    /// `g_i = mu_i c + beta_i sigma_i sqrt(c)`.
    pub fn greens_from_betas(&self, betas: &[f64]) -> Vec<f64> {
        let root = self.cycle.sqrt();
        self.lanes
            .iter()
            .zip(betas)
            .map(|(l, b)| l.arrival.mean() * self.cycle + b * l.arrival.std_dev() * root)
            .collect()
    }

    /// `beta_i = (g_i - mu_i c) / (sigma_i sqrt(c))`.
    pub fn betas_from_greens(&self, greens: &[f64]) -> Vec<f64> {
        let root = self.cycle.sqrt();
        self.lanes
            .iter()
            .zip(greens)
            .map(|(l, g)| (g - l.arrival.mean() * self.cycle) / (l.arrival.std_dev() * root))
            .collect()
    }
}

/// Which rule produced an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationMethod {
    FirstOrder,
    Refined,
    WeightedClosed,
    WeightedNumerical,
    BruteForce,
    Webster,
}

impl AllocationMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AllocationMethod::FirstOrder => "first-order",
            AllocationMethod::Refined => "refined",
            AllocationMethod::WeightedClosed => "weighted-closed",
            AllocationMethod::WeightedNumerical => "weighted-numerical",
            AllocationMethod::BruteForce => "brute-force",
            AllocationMethod::Webster => "webster",
        }
    }
}

/// Per-lane drifts and (pre-rounding) green times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    pub method: AllocationMethod,
    pub betas: Vec<f64>,
    pub greens: Vec<f64>,
    /// Objective under the approximation that defines the rule.
    pub objective_estimate: f64,
    /// Lagrange multiplier of the green-time constraint, when the rule has one.
    pub lambda: Option<f64>,
    /// Lanes whose drift was pinned to the edge of the `G0'` inversion range.
    pub pinned: Vec<usize>,
}

/// How non-integer greens are turned into implementable ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingPolicy {
    Floor,
    Nearest,
    Randomized,
}

/// Objective for the exhaustive integer search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BruteForceObjective {
    SumMeanOverflow,
    WeightedSumMeanOverflow,
}

pub(crate) fn check_greens(spec: &IntersectionSpec, greens: &[f64]) -> Result<()> {
    let bad: Vec<String> = greens
        .iter()
        .enumerate()
        .filter(|(_, &g)| g >= spec.cycle)
        .map(|(i, g)| format!("lane {i} (g = {g:.6})"))
        .collect();
    if !bad.is_empty() {
        return Err(FctlError::infeasible(format!(
            "green time reaches the cycle length {}: {}",
            spec.cycle,
            bad.join(", ")
        )));
    }
    Ok(())
}

fn first_order_objective(spec: &IntersectionSpec, betas: &[f64], weighted: bool) -> Result<f64> {
    let root = (2.0 * spec.cycle).sqrt();
    let mut total = 0.0;
    for (lane, &beta) in spec.lanes.iter().zip(betas) {
        let d = if weighted { lane.weight } else { 1.0 };
        total += d * lane.arrival.std_dev() / PI * root * g_kernel(GKernel::G0, beta / SQRT_2)?;
    }
    Ok(total)
}

/// Common drift `beta* = (c (1 - mu_T) - r_T) / (sqrt(c) sum sigma_j)`.
pub fn beta_star(spec: &IntersectionSpec) -> f64 {
    spec.slack() / (spec.cycle.sqrt() * spec.sigmas().iter().sum::<f64>())
}

/// Equal drifts for every lane.
pub fn first_order(spec: &IntersectionSpec) -> Result<AllocationResult> {
    let beta = beta_star(spec);
    let betas = vec![beta; spec.lanes.len()];
    let greens = spec.greens_from_betas(&betas);
    check_greens(spec, &greens)?;
    let objective_estimate = first_order_objective(spec, &betas, false)?;
    Ok(AllocationResult {
        method: AllocationMethod::FirstOrder,
        betas,
        greens,
        objective_estimate,
        lambda: None,
        pinned: Vec::new(),
    })
}

/// Single correction `beta_i = beta* + Omega_i(beta*)` that accounts for the
/// refined mean approximation.
pub fn refined_betas(spec: &IntersectionSpec) -> Result<AllocationResult> {
    let bs = beta_star(spec);
    let x = bs / SQRT_2;
    let g0 = g_kernel(GKernel::G0, x)?;
    let g0p = g_kernel(GKernel::G0Prime, x)?;
    let g0pp = g_kernel(GKernel::G0Second, x)?;
    let g1 = g_kernel(GKernel::G1, x)?;
    let g1p = g_kernel(GKernel::G1Prime, x)?;
    let sigmas = spec.sigmas();
    let ks: Vec<f64> = spec
        .lanes
        .iter()
        .map(|lane| {
            let (mu, s2) = (lane.arrival.mean(), lane.arrival.variance());
            let th = theta(&lane.arrival);
            s2 / (SQRT_2 * mu) * g0
                - bs * s2 / (2.0 * mu) * g0p
                - bs * bs * s2 / (2.0 * SQRT_2 * mu) * g0pp
                + th * g1
                + th * bs / SQRT_2 * g1p
        })
        .collect();
    let ratio = ks.iter().sum::<f64>() / sigmas.iter().sum::<f64>();
    let scale = (2.0 / spec.cycle).sqrt() / g0pp;
    let betas: Vec<f64> = ks
        .iter()
        .zip(&sigmas)
        .map(|(k, s)| bs + scale * (ratio - k / s))
        .collect();
    if let Some(i) = betas.iter().position(|&b| !(b > 0.0)) {
        return Err(FctlError::infeasible(format!(
            "lane {i}: corrected drift {} is not positive",
            betas[i]
        )));
    }
    let greens = spec.greens_from_betas(&betas);
    check_greens(spec, &greens)?;
    let mut objective_estimate = 0.0;
    for ((lane, &beta), &g) in spec.lanes.iter().zip(&betas).zip(&greens) {
        let point = HeavyTrafficPoint {
            beta,
            cycle: spec.cycle,
            green: g,
        };
        objective_estimate += mean_refined(&point, &lane.arrival)?;
    }
    Ok(AllocationResult {
        method: AllocationMethod::Refined,
        betas,
        greens,
        objective_estimate,
        lambda: None,
        pinned: Vec::new(),
    })
}

/// Closed form for weighted lanes: `beta_i` proportional to `sqrt(d_i)`.
pub fn weighted_closed_form(spec: &IntersectionSpec) -> Result<AllocationResult> {
    let denom: f64 = spec
        .lanes
        .iter()
        .map(|l| l.weight.sqrt() * l.arrival.std_dev())
        .sum::<f64>()
        * spec.cycle.sqrt();
    let betas: Vec<f64> = spec
        .lanes
        .iter()
        .map(|l| l.weight.sqrt() * spec.slack() / denom)
        .collect();
    let greens = spec.greens_from_betas(&betas);
    check_greens(spec, &greens)?;
    let objective_estimate = first_order_objective(spec, &betas, true)?;
    Ok(AllocationResult {
        method: AllocationMethod::WeightedClosed,
        betas,
        greens,
        objective_estimate,
        lambda: None,
        pinned: Vec::new(),
    })
}

/// Solves `G0'(b) = target` for `b` in `[MIN_B, MAX_B]`; `None` when the
/// target lies outside the range of `G0'` there.
pub fn invert_g0_prime(target: f64) -> Result<Option<f64>> {
    let (mut lo, mut hi) = (MIN_B, MAX_B);
    let f_lo = g_kernel(GKernel::G0Prime, lo)? - target;
    let f_hi = g_kernel(GKernel::G0Prime, hi)? - target;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Ok(None);
    }
    let mut b = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = g_kernel(GKernel::G0Prime, b)? - target;
        if f == 0.0 {
            return Ok(Some(b));
        }
        if f < 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let slope = g_kernel(GKernel::G0Second, b)?;
        let mut next = b - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 1e-15 * b || (next - b).abs() <= 1e-15 * b {
            return Ok(Some(next));
        }
        b = next;
    }
    Ok(Some(b))
}

/// Weighted rule without the closed-form simplification: a single multiplier
/// `lambda < 0` with `G0'(beta_i / sqrt 2) = pi lambda / (d_i sqrt c)`, found by
/// bisection on the green-time constraint.
pub fn weighted_numerical(spec: &IntersectionSpec) -> Result<AllocationResult> {
    let root = spec.cycle.sqrt();
    let slack = spec.slack();
    let sigmas = spec.sigmas();
    let betas_for = |lambda: f64| -> Result<(Vec<f64>, Vec<usize>)> {
        let mut betas = Vec::with_capacity(spec.lanes.len());
        let mut pinned = Vec::new();
        for (i, lane) in spec.lanes.iter().enumerate() {
            let target = PI * lambda / (lane.weight * root);
            let b = match invert_g0_prime(target)? {
                Some(b) => b,
                None => {
                    pinned.push(i);
                    if target < g_kernel(GKernel::G0Prime, MIN_B)? {
                        MIN_B
                    } else {
                        MAX_B
                    }
                }
            };
            betas.push(SQRT_2 * b);
        }
        Ok((betas, pinned))
    };
    let residual = |betas: &[f64]| -> f64 {
        betas.iter().zip(&sigmas).map(|(b, s)| b * s).sum::<f64>() * root - slack
    };
    // residual decreases in ln(-lambda)
    let (mut lo, mut hi) = ((1e-12f64).ln(), (1e6f64).ln());
    let (b_lo, _) = betas_for(-lo.exp())?;
    let (b_hi, _) = betas_for(-hi.exp())?;
    if !(residual(&b_lo) >= 0.0 && residual(&b_hi) <= 0.0) {
        return Err(FctlError::numeric(
            "no multiplier in [-1e6, -1e-12] balances the green-time constraint",
        ));
    }
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let lambda = -mid.exp();
        let (betas, pinned) = betas_for(lambda)?;
        let r = residual(&betas);
        let done = r.abs() < 1e-10 || (hi - lo) < 1e-15;
        best = Some((lambda, betas, pinned));
        if done {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (lambda, betas, pinned) = best.expect("loop runs at least once");
    if residual(&betas).abs() > 1e-9 {
        return Err(FctlError::numeric(format!(
            "multiplier bisection stalled with constraint residual {:.3e}",
            residual(&betas)
        )));
    }
    let greens = spec.greens_from_betas(&betas);
    check_greens(spec, &greens)?;
    let objective_estimate = first_order_objective(spec, &betas, true)?;
    Ok(AllocationResult {
        method: AllocationMethod::WeightedNumerical,
        betas,
        greens,
        objective_estimate,
        lambda: Some(lambda),
        pinned,
    })
}

/// Makes greens implementable. `Randomized` keeps the means exactly by mixing
/// floor and ceiling; `Floor` and `Nearest` produce integers and re-check
/// stability and the green budget.
pub fn round_greens(
    spec: &IntersectionSpec,
    greens: &[f64],
    policy: RoundingPolicy,
) -> Result<Vec<GreenTime>> {
    if greens.len() != spec.lanes.len() {
        return Err(FctlError::invalid(format!(
            "{} greens given for {} lanes",
            greens.len(),
            spec.lanes.len()
        )));
    }
    if policy == RoundingPolicy::Randomized {
        return greens.iter().map(|&g| GreenTime::from_mean(g)).collect();
    }
    let rounded: Vec<f64> = greens
        .iter()
        .map(|&g| {
            if policy == RoundingPolicy::Floor {
                (g + 1e-9).floor()
            } else {
                g.round()
            }
        })
        .collect();
    let unstable: Vec<String> = spec
        .lanes
        .iter()
        .zip(&rounded)
        .enumerate()
        .filter(|(_, (lane, &g))| !(g > 0.0) || lane.arrival.mean() * spec.cycle / g >= 1.0)
        .map(|(i, (lane, g))| {
            format!(
                "lane {i} (g = {g}, rho = {:.6})",
                lane.arrival.mean() * spec.cycle / g
            )
        })
        .collect();
    if !unstable.is_empty() {
        return Err(FctlError::infeasible(format!(
            "rounding leaves lanes unstable: {}",
            unstable.join(", ")
        )));
    }
    let total: f64 = rounded.iter().sum();
    if total > spec.green_budget() + 1e-9 {
        return Err(FctlError::infeasible(format!(
            "rounded greens sum to {total}, more than c - r_T = {}",
            spec.green_budget()
        )));
    }
    Ok(rounded
        .iter()
        .map(|&g| GreenTime::deterministic(g as u32))
        .collect())
}

/// Exhaustive search over integer greens with `sum g_i = c - r_T`, minimising
/// the exact (weighted) sum of mean overflow queues. Ties go to the
/// lexicographically smallest green vector.
pub fn brute_force_integer(
    spec: &IntersectionSpec,
    objective: BruteForceObjective,
) -> Result<AllocationResult> {
    let n = spec.lanes.len();
    let budget_f = spec.green_budget();
    if n > 5 || budget_f > 600.0 {
        return Err(FctlError::Resource(format!(
            "brute force is limited to 5 lanes and c - r_T <= 600 (got {n} lanes, {budget_f}); use the analytic rules"
        )));
    }
    let integral = |x: f64| (x - x.round()).abs() < 1e-9;
    if !integral(spec.cycle) || !integral(spec.lost_time) {
        return Err(FctlError::invalid(
            "brute force needs integer cycle and lost time",
        ));
    }
    let budget = budget_f.round() as usize;
    let lows: Vec<usize> = spec
        .lanes
        .iter()
        .map(|l| (l.arrival.mean() * spec.cycle + 1e-12).floor() as usize + 1)
        .collect();
    let low_total: usize = lows.iter().sum();
    if low_total > budget {
        return Err(FctlError::infeasible(format!(
            "stable integer greens need at least {low_total} slots, only {budget} available"
        )));
    }
    let spare = budget - low_total;
    // values[i][k] = objective of lane i with green lows[i] + k
    let mut values = Vec::with_capacity(n);
    for (lane, &low) in spec.lanes.iter().zip(&lows) {
        let w = match objective {
            BruteForceObjective::SumMeanOverflow => 1.0,
            BruteForceObjective::WeightedSumMeanOverflow => lane.weight,
        };
        let mut row = Vec::with_capacity(spare + 1);
        for k in 0..=spare {
            let g = (low + k) as u32;
            let inst = FctlInstance::new(
                lane.arrival.clone(),
                GreenTime::deterministic(g),
                spec.cycle,
            )?;
            row.push(w * mean_overflow(&inst)?);
        }
        values.push(row);
    }
    // best[i][s] = min over lanes i.. using exactly s spare slots
    let mut best = vec![vec![f64::INFINITY; spare + 1]; n + 1];
    best[n][0] = 0.0;
    for i in (0..n).rev() {
        for s in 0..=spare {
            best[i][s] = (0..=s)
                .map(|k| values[i][k] + best[i + 1][s - k])
                .fold(f64::INFINITY, f64::min);
        }
    }
    let mut greens = Vec::with_capacity(n);
    let mut left = spare;
    for i in 0..n {
        let target = best[i][left];
        let tol = 1e-12 * target.abs().max(1.0);
        let k = (0..=left)
            .find(|&k| values[i][k] + best[i + 1][left - k] <= target + tol)
            .expect("the optimum is attained");
        greens.push((lows[i] + k) as f64);
        left -= k;
    }
    let betas = spec.betas_from_greens(&greens);
    Ok(AllocationResult {
        method: AllocationMethod::BruteForce,
        betas,
        greens,
        objective_estimate: best[0][spare],
        lambda: None,
        pinned: Vec::new(),
    })
}

/// Runs the rule named by `method` (brute force minimises the weighted sum).
pub fn allocate(spec: &IntersectionSpec, method: AllocationMethod) -> Result<AllocationResult> {
    match method {
        AllocationMethod::FirstOrder => first_order(spec),
        AllocationMethod::Refined => refined_betas(spec),
        AllocationMethod::WeightedClosed => weighted_closed_form(spec),
        AllocationMethod::WeightedNumerical => weighted_numerical(spec),
        AllocationMethod::BruteForce => {
            brute_force_integer(spec, BruteForceObjective::WeightedSumMeanOverflow)
        }
        AllocationMethod::Webster => crate::delay::webster_allocation(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lane(model: ArrivalModel, d: f64) -> LaneSpec {
        LaneSpec::new(model, d).unwrap()
    }

    fn two_lane(c: f64) -> IntersectionSpec {
        IntersectionSpec::new(
            vec![
                lane(ArrivalModel::poisson(0.4).unwrap(), 1.0),
                lane(ArrivalModel::geometric(0.4).unwrap(), 1.0),
            ],
            c,
            5.0,
        )
        .unwrap()
    }

    fn unit_sigma_model(mean: f64) -> ArrivalModel {
        // variance 1 with the given mean
        ArrivalModel::negative_binomial(mean, 1.0).unwrap()
    }

    #[test]
    fn beta_star_two_lane() {
        let r = first_order(&two_lane(100.0)).unwrap();
        assert!((r.betas[0] - 1.086).abs() < 5e-4);
        assert!((r.greens[0] - 46.87).abs() < 5e-3 && (r.greens[1] - 48.13).abs() < 5e-3);
        let r = first_order(&two_lane(500.0)).unwrap();
        assert!((r.betas[0] - 3.077).abs() < 5e-4);
    }

    #[test]
    fn single_lane_full_cycle_is_rejected() {
        let spec =
            IntersectionSpec::new(vec![lane(unit_sigma_model(0.5), 1.0)], 100.0, 0.0).unwrap();
        assert!((beta_star(&spec) - 5.0).abs() < 1e-12);
        assert!(matches!(first_order(&spec), Err(FctlError::Infeasible(_))));
    }

    #[test]
    fn infeasible_intersection_is_named() {
        let r = IntersectionSpec::new(
            vec![lane(ArrivalModel::poisson(0.5).unwrap(), 1.0); 2],
            100.0,
            5.0,
        );
        assert!(matches!(r, Err(FctlError::Infeasible(ref s)) if s.contains("c (1 - mu_T) - r_T")));
    }

    #[test]
    fn refined_two_lane() {
        let r = refined_betas(&two_lane(500.0)).unwrap();
        assert!((r.betas[0] - 3.049).abs() < 5e-4 && (r.betas[1] - 3.101).abs() < 5e-4);
        assert!((r.greens[0] - 243.1).abs() < 5e-2 && (r.greens[1] - 251.9).abs() < 5e-2);
        let r = refined_betas(&two_lane(30.0)).unwrap();
        assert!((r.betas[0] - 0.132).abs() < 5e-4 && (r.betas[1] - 0.132).abs() < 5e-4);
    }

    #[test]
    fn refined_identical_lanes_unchanged() {
        let m = ArrivalModel::geometric(0.3).unwrap();
        let spec =
            IntersectionSpec::new(vec![lane(m.clone(), 1.0), lane(m, 1.0)], 80.0, 4.0).unwrap();
        let r = refined_betas(&spec).unwrap();
        let bs = beta_star(&spec);
        assert!(r.betas.iter().all(|b| (b - bs).abs() < 1e-14));
    }

    #[test]
    fn weighted_closed_examples() {
        // sigma = 1 lanes, d = (1, 4), slack 10, c = 100
        let m = unit_sigma_model(0.2);
        let spec =
            IntersectionSpec::new(vec![lane(m.clone(), 1.0), lane(m, 4.0)], 100.0, 50.0).unwrap();
        assert!((spec.slack() - 10.0).abs() < 1e-12);
        let r = weighted_closed_form(&spec).unwrap();
        assert!((r.betas[0] - 1.0 / 3.0).abs() < 1e-14 && (r.betas[1] - 2.0 / 3.0).abs() < 1e-14);
        let used: f64 = r.betas.iter().sum::<f64>() * 10.0;
        assert!((used - 10.0).abs() < 1e-12);

        let equal = weighted_closed_form(&two_lane(100.0)).unwrap();
        let star = beta_star(&two_lane(100.0));
        assert!(equal.betas.iter().all(|b| (b - star).abs() < 1e-14));
    }

    #[test]
    fn numerical_equal_weights_collapse() {
        let spec = two_lane(100.0);
        let r = weighted_numerical(&spec).unwrap();
        let star = beta_star(&spec);
        assert!(
            r.betas.iter().all(|b| (b - star).abs() < 1e-9),
            "{:?} vs {star}",
            r.betas
        );
        assert!(r.lambda.unwrap() < 0.0);
    }

    fn four_lane(c: f64, increasing: bool) -> IntersectionSpec {
        let models = [
            ArrivalModel::geometric(0.3).unwrap(),
            ArrivalModel::poisson(0.3).unwrap(),
            ArrivalModel::negative_binomial(0.1, 0.4).unwrap(),
            ArrivalModel::negative_binomial(0.1, 0.4).unwrap(),
        ];
        let lanes = models
            .into_iter()
            .enumerate()
            .map(|(i, m)| lane(m, if increasing { (i + 1) as f64 } else { 1.0 }))
            .collect();
        IntersectionSpec::new(lanes, c, 5.0).unwrap()
    }

    #[test]
    fn four_lane_weighted() {
        let r = weighted_numerical(&four_lane(100.0, false)).unwrap();
        let expected = [33.844, 33.371, 13.893, 13.893];
        for (g, e) in r.greens.iter().zip(expected) {
            assert!((g - e).abs() < 5e-3, "{:?}", r.greens);
        }
        let r = weighted_numerical(&four_lane(100.0, true)).unwrap();
        let expected = [0.421, 0.576, 0.686, 0.772];
        for (b, e) in r.betas.iter().zip(expected) {
            assert!((b - e).abs() < 5e-4, "{:?}", r.betas);
        }
        let used: f64 = r.greens.iter().sum();
        assert!((used - 95.0).abs() < 1e-8);
        assert!(r.pinned.is_empty());
    }

    #[test]
    fn g0_prime_inversion() {
        for &b in &[0.01, 0.3, 1.0, 4.0] {
            let target = g_kernel(GKernel::G0Prime, b).unwrap();
            let back = invert_g0_prime(target).unwrap().unwrap();
            assert!((back - b).abs() < 1e-10 * b.max(1.0), "{b} -> {back}");
        }
        assert!(invert_g0_prime(1.0).unwrap().is_none());
    }

    #[test]
    fn rounding_policies() {
        let spec = two_lane(100.0);
        let g = round_greens(&spec, &[46.87, 48.13], RoundingPolicy::Randomized).unwrap();
        match g[0] {
            GreenTime::Randomized {
                floor: 46,
                ceil: 47,
                p,
            } => assert!((p - 0.13).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let g = round_greens(&spec, &[47.0, 48.0], RoundingPolicy::Nearest).unwrap();
        assert_eq!(g[0], GreenTime::deterministic(47));

        let tight = IntersectionSpec::new(
            vec![lane(ArrivalModel::poisson(0.4).unwrap(), 1.0)],
            50.0,
            20.0,
        )
        .unwrap();
        let err = round_greens(&tight, &[20.2], RoundingPolicy::Floor).unwrap_err();
        assert!(matches!(err, FctlError::Infeasible(ref s) if s.contains("lane 0")));
    }

    #[test]
    fn brute_force_single_lane() {
        let spec = IntersectionSpec::new(
            vec![lane(ArrivalModel::poisson(0.3).unwrap(), 1.0)],
            40.0,
            5.0,
        )
        .unwrap();
        let r = brute_force_integer(&spec, BruteForceObjective::SumMeanOverflow).unwrap();
        assert_eq!(r.greens, vec![35.0]);
    }

    #[test]
    fn brute_force_guard() {
        let spec = two_lane(700.0);
        assert!(matches!(
            brute_force_integer(&spec, BruteForceObjective::SumMeanOverflow),
            Err(FctlError::Resource(_))
        ));
    }

    #[test]
    fn intersection_json() {
        let spec: IntersectionSpec = serde_json::from_str(
            r#"{"cycle":100,"lost_time":5,"lanes":[{"arrival":{"kind":"poisson","mean":0.4}},
                {"arrival":{"kind":"geometric","mean":0.4},"weight":2}]}"#,
        )
        .unwrap();
        assert_eq!(spec.lanes()[1].weight, 2.0);
        assert!(serde_json::from_str::<IntersectionSpec>(
            r#"{"cycle":100,"lanes":[{"arrival":{"kind":"poisson","mean":0.4}}],"extra":1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<IntersectionSpec>(
            r#"{"cycle":10,"lanes":[{"arrival":{"kind":"poisson","mean":0.4}}],"lost_time":7}"#
        )
        .is_err());
    }
}
