//! Exact analysis of the overflow queue through its contour-integral transform.
//!
//! With `K(z) = Y(z)^c E[z^-G]` the PGF of the overflow queue is
//!
//! ```text
//! E[w^X] = exp( (1/2 pi i) oint (Y'(z) z - Y(z)) / (z - Y(z))
//!                  * (w - Y(w)) / (z Y(w) - w Y(z)) * ln(1 - K(z)) dz )
//! ```
//!
//! and the mean is `(1/2 pi i) oint (Y - z mu)/(Y - z) * (-K'(z)/(1 - K(z))) dz`.
//! Both contours are circles through the saddle point of
//! `h(z) = (c ln Y(z) + ln E[z^-G]) / E[G]`, which keeps `|K| < 1` on the path.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arrivals::ArrivalModel;
use crate::error::{FctlError, Result};
use crate::quadrature::{periodic_trapezoid, QuadraturePolicy};

/// Green period of a cycle, in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenTime {
    /// The same integer green every cycle.
    Deterministic { g: u32 },
    /// Each cycle independently gets `floor` slots with probability `p`,
    /// otherwise `ceil = floor + 1`.
    Randomized { floor: u32, ceil: u32, p: f64 },
}

impl GreenTime {
    pub fn deterministic(g: u32) -> Self {
        GreenTime::Deterministic { g }
    }

    /// Randomized green between `floor` and `floor + 1`; `p` weights the floor.
    pub fn randomized(floor: u32, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(FctlError::invalid(format!(
                "mixing probability {p} is not in [0, 1]"
            )));
        }
        Ok(GreenTime::Randomized {
            floor,
            ceil: floor + 1,
            p,
        })
    }

    /// Green time whose mean equals `g`: deterministic when `g` is an integer,
    /// otherwise randomized between its floor and ceiling.
    pub fn from_mean(g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() || g > u32::MAX as f64 - 1.0 {
            return Err(FctlError::invalid(format!(
                "green time {g} must be positive"
            )));
        }
        let floor = g.floor();
        let frac = g - floor;
        if frac < 1e-12 {
            return Ok(GreenTime::deterministic(floor as u32));
        }
        if 1.0 - frac < 1e-12 {
            return Ok(GreenTime::deterministic(floor as u32 + 1));
        }
        GreenTime::randomized(floor as u32, 1.0 - frac)
    }

    /// `E[G]`.
    pub fn mean(&self) -> f64 {
        match *self {
            GreenTime::Deterministic { g } => g as f64,
            GreenTime::Randomized { floor, ceil, p } => p * floor as f64 + (1.0 - p) * ceil as f64,
        }
    }

    /// Largest green period the model can produce.
    pub fn max_slots(&self) -> u32 {
        match *self {
            GreenTime::Deterministic { g } => g,
            GreenTime::Randomized { floor, ceil, p } => {
                if p >= 1.0 {
                    floor
                } else {
                    ceil
                }
            }
        }
    }

    /// `(floor, p)` such that `E[z^-G] = z^-floor (p + (1-p)/z)`.
    fn split(&self) -> (f64, f64) {
        match *self {
            GreenTime::Deterministic { g } => (g as f64, 1.0),
            GreenTime::Randomized { floor, p, .. } => (floor as f64, p),
        }
    }

    /// `ln E[z^-G]` for complex `z` (any branch; only its exponential is used).
    fn ln_inverse_mgf(&self, z: Complex64, ln_z: Complex64) -> Complex64 {
        let (floor, p) = self.split();
        let base = -floor * ln_z;
        if p >= 1.0 {
            base
        } else {
            base + (p + (1.0 - p) / z).ln()
        }
    }

    /// `d/dz ln E[z^-G]`.
    fn ln_inverse_mgf_derivative(&self, z: Complex64) -> Complex64 {
        let (floor, p) = self.split();
        let mut d = -floor / z;
        if p < 1.0 {
            d -= (1.0 - p) / (z * (p * z + (1.0 - p)));
        }
        d
    }

    /// `d^2/dz^2 ln E[z^-G]` on the real axis.
    fn ln_inverse_mgf_second(&self, z: f64) -> f64 {
        let (floor, p) = self.split();
        let mut d = floor / (z * z);
        if p < 1.0 {
            let q = p * z * z + (1.0 - p) * z;
            d += (1.0 - p) * (2.0 * p * z + 1.0 - p) / (q * q);
        }
        d
    }
}

/// One lane of a fixed-cycle signal: arrivals, green period and cycle length.
#[derive(Debug, Clone, PartialEq)]
pub struct FctlInstance {
    arrival: ArrivalModel,
    green: GreenTime,
    cycle: f64,
    policy: QuadraturePolicy,
}

/// Saddle point of `h(z)` on the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleInfo {
    pub z_sp: f64,
    pub h_at_sp: f64,
    pub h2_at_sp: f64,
}

impl FctlInstance {
    /// Builds an instance; the load `rho = mu c / E[G]` must be below one.
    ///
    /// The cycle may be non-integer, in which case `Y(z)^c` is taken on the
    /// principal branch of `ln Y`. The quadrature policy honours
    /// `FCTL_QUADRATURE_MAX`.
    pub fn new(arrival: ArrivalModel, green: GreenTime, cycle: f64) -> Result<Self> {
        if !(cycle > 0.0) || !cycle.is_finite() {
            return Err(FctlError::invalid(format!(
                "cycle length {cycle} must be positive"
            )));
        }
        let g = green.mean();
        if !(g > 0.0) {
            return Err(FctlError::invalid("green time must be positive"));
        }
        if green.max_slots() as f64 > cycle + 1e-9 {
            return Err(FctlError::invalid(format!(
                "green time {} exceeds the cycle length {cycle}",
                green.max_slots()
            )));
        }
        let rho = arrival.mean() * cycle / g;
        if rho >= 1.0 {
            return Err(FctlError::infeasible(format!(
                "load mu c / g = {rho:.6} is not below 1 (mu = {}, c = {cycle}, g = {g})",
                arrival.mean()
            )));
        }
        Ok(Self {
            arrival,
            green,
            cycle,
            policy: QuadraturePolicy::from_env(),
        })
    }

    pub fn with_policy(mut self, policy: QuadraturePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn arrival(&self) -> &ArrivalModel {
        &self.arrival
    }

    pub fn green(&self) -> GreenTime {
        self.green
    }

    pub fn cycle(&self) -> f64 {
        self.cycle
    }

    pub fn policy(&self) -> &QuadraturePolicy {
        &self.policy
    }

    /// `rho = mu c / E[G]`.
    pub fn load(&self) -> f64 {
        self.arrival.mean() * self.cycle / self.green.mean()
    }

    /// Heavy-traffic drift `beta = (E[G] - mu c) / (sigma sqrt(c))`.
    pub fn beta(&self) -> f64 {
        (self.green.mean() - self.arrival.mean() * self.cycle)
            / (self.arrival.std_dev() * self.cycle.sqrt())
    }

    fn real_parts(&self, z: f64) -> (f64, f64, f64) {
        let zc = Complex64::new(z, 0.0);
        let y = self.arrival.derivative_unchecked(zc, 0).re;
        let y1 = self.arrival.derivative_unchecked(zc, 1).re;
        let y2 = self.arrival.derivative_unchecked(zc, 2).re;
        (y, y1, y2)
    }

    fn h(&self, z: f64) -> f64 {
        let zc = Complex64::new(z, 0.0);
        let ln_y = self.arrival.ln_pgf_unchecked(zc).re;
        let ln_e = self
            .green
            .ln_inverse_mgf(zc, Complex64::new(z.ln(), 0.0))
            .re;
        (self.cycle * ln_y + ln_e) / self.green.mean()
    }

    fn h_prime(&self, z: f64) -> f64 {
        let (y, y1, _) = self.real_parts(z);
        let e = self
            .green
            .ln_inverse_mgf_derivative(Complex64::new(z, 0.0))
            .re;
        (self.cycle * y1 / y + e) / self.green.mean()
    }

    fn h_second(&self, z: f64) -> f64 {
        let (y, y1, y2) = self.real_parts(z);
        let ly = y2 / y - (y1 / y) * (y1 / y);
        (self.cycle * ly + self.green.ln_inverse_mgf_second(z)) / self.green.mean()
    }
}

/// Locates the saddle point of `h` on `(1, R)` by safeguarded Newton
/// iteration started at `1 + beta / (sigma sqrt(c))`.
pub fn saddle_point(inst: &FctlInstance) -> Result<SaddleInfo> {
    let radius = inst.arrival.radius();
    let mut lo = 1.0;
    let guess = 1.0 + inst.beta().max(1e-6) / (inst.arrival.std_dev() * inst.cycle.sqrt());
    let mut hi = if guess < radius {
        guess
    } else {
        0.5 * (1.0 + radius)
    };
    let mut expanded = 0;
    while inst.h_prime(hi) <= 0.0 {
        lo = hi;
        let next = 1.0 + 2.0 * (hi - 1.0);
        hi = if next < radius {
            next
        } else {
            0.5 * (hi + radius)
        };
        expanded += 1;
        if expanded > 200 || !hi.is_finite() {
            return Err(FctlError::numeric(format!(
                "saddle point not found below the PGF radius {radius}"
            )));
        }
    }
    let mut z = guess.clamp(lo, hi);
    if z <= lo || z >= hi {
        z = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let d = inst.h_prime(z);
        if d.abs() < 1e-12 {
            return finish_saddle(inst, z, radius);
        }
        if d < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let step = d / inst.h_second(z);
        let mut next = z - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) < 4.0 * f64::EPSILON * z {
            return finish_saddle(inst, z, radius);
        }
        z = next;
    }
    Err(FctlError::numeric(
        "saddle-point iteration did not converge in 100 steps",
    ))
}

fn finish_saddle(inst: &FctlInstance, z: f64, radius: f64) -> Result<SaddleInfo> {
    if z >= radius {
        return Err(FctlError::numeric(format!(
            "saddle point {z} is not inside the PGF radius {radius}"
        )));
    }
    Ok(SaddleInfo {
        z_sp: z,
        h_at_sp: inst.h(z),
        h2_at_sp: inst.h_second(z),
    })
}

/// Quantities on one contour node shared by every integrand.
struct Node {
    z: Complex64,
    y: Complex64,
    /// `ln(1 - K(z))`
    log_gap: Complex64,
    /// `K'(z)/K(z)`
    log_k_prime: Complex64,
    /// `K(z)`
    k: Complex64,
}

fn contour_node(inst: &FctlInstance, z_sp: f64, theta: f64) -> Result<Node> {
    let z = Complex64::from_polar(z_sp, theta);
    let ln_z = Complex64::new(z_sp.ln(), theta);
    let ln_y = inst.arrival.ln_pgf_unchecked(z);
    let ln_k = inst.cycle * ln_y + inst.green.ln_inverse_mgf(z, ln_z);
    let k = ln_k.exp();
    if k.norm() >= 1.0 {
        return Err(FctlError::numeric(format!(
            "contour placement failed: |K(z)| = {} >= 1 at angle {theta}",
            k.norm()
        )));
    }
    let y = inst.arrival.pgf_unchecked(z);
    let log_k_prime = inst.cycle * inst.arrival.log_derivative_unchecked(z)
        + inst.green.ln_inverse_mgf_derivative(z);
    Ok(Node {
        z,
        y,
        log_gap: (-k).ln_1p(),
        log_k_prime,
        k,
    })
}

trait Ln1p {
    fn ln_1p(self) -> Self;
}

impl Ln1p for Complex64 {
    /// `ln(1 + x)`, accurate for small `|x|`.
    fn ln_1p(self) -> Self {
        let one_plus = Complex64::new(1.0, 0.0) + self;
        if self.norm() > 0.25 {
            return one_plus.ln();
        }
        // |1+x|^2 = 1 + 2 re x + |x|^2, arg from atan2
        let re = (2.0 * self.re + self.norm_sqr()).ln_1p() * 0.5;
        Complex64::new(re, one_plus.im.atan2(one_plus.re))
    }
}

/// Exponents `ln E[w^X]` for several points `w`, all inside the contour.
fn log_pgf_many(
    inst: &FctlInstance,
    saddle: &SaddleInfo,
    ws: &[Complex64],
) -> Result<Vec<Complex64>> {
    let limit = saddle.z_sp.min(inst.arrival.radius());
    let mut yw = Vec::with_capacity(ws.len());
    for &w in ws {
        if w.norm() >= limit {
            return Err(FctlError::domain(format!(
                "|w| = {} must stay below the contour radius {}",
                w.norm(),
                saddle.z_sp
            )));
        }
        yw.push(inst.arrival.pgf_unchecked(w));
    }
    let (values, _) = periodic_trapezoid(&inst.policy, ws.len(), |theta, acc| {
        let node = contour_node(inst, saddle.z_sp, theta)?;
        let y1 = inst.arrival.derivative_unchecked(node.z, 1);
        // dz = i z dtheta, and the 1/(2 pi i) leaves the angular mean of F z
        let common = (y1 * node.z - node.y) / (node.z - node.y) * node.log_gap * node.z;
        for ((slot, &w), &y_w) in acc.iter_mut().zip(ws).zip(&yw) {
            *slot += common * (w - y_w) / (node.z * y_w - w * node.y);
        }
        Ok(())
    })?;
    Ok(values)
}

/// `E[w^X]` for `|w|` below the saddle point.
pub fn overflow_pgf(inst: &FctlInstance, w: Complex64) -> Result<Complex64> {
    let saddle = saddle_point(inst)?;
    Ok(log_pgf_many(inst, &saddle, &[w])?[0].exp())
}

/// `P(X = 0)`.
pub fn prob_empty(inst: &FctlInstance) -> Result<f64> {
    Ok(overflow_pgf(inst, Complex64::new(0.0, 0.0))?.re)
}

/// `E[X]`.
pub fn mean_overflow(inst: &FctlInstance) -> Result<f64> {
    let saddle = saddle_point(inst)?;
    let mu = inst.arrival.mean();
    let (values, _) = periodic_trapezoid(&inst.policy, 1, |theta, acc| {
        let node = contour_node(inst, saddle.z_sp, theta)?;
        let k_prime = node.log_k_prime * node.k;
        let f = (node.y - node.z * mu) / (node.y - node.z) * (-k_prime / (1.0 - node.k));
        acc[0] += f * node.z;
        Ok(())
    })?;
    Ok(values[0].re)
}

/// Stationary distribution `P(X = 0), P(X = 1), ...`, truncated once the
/// remaining mass drops below `tail`.
///
/// Coefficients are extracted by a discrete Fourier transform of the PGF on
/// the unit circle, doubling the number of points until they settle.
pub fn overflow_pmf_vector(inst: &FctlInstance, tail: f64) -> Result<Vec<f64>> {
    let saddle = saddle_point(inst)?;
    const MAX_POINTS: usize = 1 << 15;
    let mut m = 64usize;
    let mut values = unit_circle_pgf(inst, &saddle, m, 0, 1)?;
    let mut previous = dft_coefficients(&values);
    loop {
        if 2 * m > MAX_POINTS {
            return Err(FctlError::numeric(format!(
                "pmf extraction did not settle within {MAX_POINTS} points"
            )));
        }
        // new points interleave with the old ones
        let odd = unit_circle_pgf(inst, &saddle, 2 * m, 1, 2)?;
        let mut merged = Vec::with_capacity(2 * m);
        for j in 0..m {
            merged.push(values[j]);
            merged.push(odd[j]);
        }
        values = merged;
        m *= 2;
        let current = dft_coefficients(&values);
        let change = previous
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let upper_mass: f64 = current[m / 2..].iter().map(|p| p.abs()).sum();
        previous = current;
        if change < 1e-13 && upper_mass < 1e-13 {
            break;
        }
    }
    let mut pmf = Vec::new();
    let mut cumulative = 0.0;
    for &p in &previous {
        if p < -1e-12 {
            return Err(FctlError::numeric(format!(
                "pmf coefficient {p} is negative"
            )));
        }
        let p = p.max(0.0);
        pmf.push(p);
        cumulative += p;
        if 1.0 - cumulative < tail {
            break;
        }
    }
    Ok(pmf)
}

/// `P(X = k)`.
pub fn overflow_pmf(inst: &FctlInstance, k: usize) -> Result<f64> {
    let pmf = overflow_pmf_vector(inst, 1e-15)?;
    Ok(pmf.get(k).copied().unwrap_or(0.0))
}

/// PGF at `w_j = exp(2 pi i j / m)` for `j = offset, offset + stride, ...`.
fn unit_circle_pgf(
    inst: &FctlInstance,
    saddle: &SaddleInfo,
    m: usize,
    offset: usize,
    stride: usize,
) -> Result<Vec<Complex64>> {
    let ws: Vec<Complex64> = (offset..m)
        .step_by(stride)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64))
        .collect();
    Ok(log_pgf_many(inst, saddle, &ws)?
        .into_iter()
        .map(|e| e.exp())
        .collect())
}

fn dft_coefficients(values: &[Complex64]) -> Vec<f64> {
    let m = values.len();
    let mut buffer = values.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buffer);
    buffer.iter().map(|c| c.re / m as f64).collect()
}

/// `E[X^k]` for `k >= 1`, from Cauchy derivatives of the PGF around `w = 1`.
pub fn overflow_moment(inst: &FctlInstance, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let factorial = factorial_moments(inst, k)?;
    // E[X^k] = sum_j S(k, j) E[(X)_j] with Stirling numbers of the second kind
    let mut stirling = vec![vec![0.0f64; k + 1]; k + 1];
    stirling[0][0] = 1.0;
    for n in 1..=k {
        for j in 1..=n {
            stirling[n][j] = j as f64 * stirling[n - 1][j] + stirling[n - 1][j - 1];
        }
    }
    Ok((1..=k).map(|j| stirling[k][j] * factorial[j - 1]).sum())
}

/// Factorial moments `E[X (X-1) ... (X-j+1)]` for `j = 1..=k`.
fn factorial_moments(inst: &FctlInstance, k: usize) -> Result<Vec<f64>> {
    let saddle = saddle_point(inst)?;
    let rho = (0.5 * (saddle.z_sp - 1.0)).min(0.1);
    let mut m = 16usize.max(4 * k);
    let mut previous: Option<Vec<f64>> = None;
    while m <= 4096 {
        let ws: Vec<Complex64> = (0..m)
            .map(|j| 1.0 + Complex64::from_polar(rho, std::f64::consts::TAU * j as f64 / m as f64))
            .collect();
        let values: Vec<Complex64> = log_pgf_many(inst, &saddle, &ws)?
            .into_iter()
            .map(|e| e.exp())
            .collect();
        let mut moments = Vec::with_capacity(k);
        let mut scale = 1.0;
        for order in 1..=k {
            scale *= order as f64 / rho;
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v * Complex64::from_polar(
                        1.0,
                        -std::f64::consts::TAU * (order * j) as f64 / m as f64,
                    )
                })
                .sum();
            moments.push(scale * sum.re / m as f64);
        }
        if let Some(prev) = &previous {
            let settled = prev
                .iter()
                .zip(&moments)
                .all(|(a, b)| (a - b).abs() <= 1e-11 * b.abs().max(1.0));
            if settled {
                return Ok(moments);
            }
        }
        previous = Some(moments);
        m *= 2;
    }
    Err(FctlError::numeric(
        "Cauchy moment extraction did not settle",
    ))
}

/// `E[exp(t X / (sigma sqrt(c)))]`, defined for `Re t <= beta / 2`.
pub fn scaled_mgf(inst: &FctlInstance, t: Complex64) -> Result<Complex64> {
    let beta = inst.beta();
    if t.re > 0.5 * beta {
        return Err(FctlError::domain(format!(
            "scaled mgf needs Re t <= beta/2 = {}, got {}",
            0.5 * beta,
            t.re
        )));
    }
    let w = (t / (inst.arrival.std_dev() * inst.cycle.sqrt())).exp();
    overflow_pgf(inst, w)
}
