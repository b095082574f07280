//! The all-time maximum `M_beta` of a Gaussian random walk with drift `-beta`
//! and unit variance, and the G-integral family that parameterises the
//! heavy-traffic moments of the overflow queue.
//!
//! With `u = b^2 + t^2` the kernels are
//!
//! ```text
//! G0(b) = int_0^inf t^2/u / (e^u - 1) dt      G1(b) = int_0^inf 1/(e^u - 1) dt
//! G2(b) = int_0^inf b^2/u / (e^u - 1) dt      G3(b) = int_0^inf t^2/u^2 / (e^u - 1) dt
//! G4(b) = int_0^inf t^2/u * e^u/(e^u - 1)^2 dt
//! ```
//!
//! plus the derivatives `G0'`, `G0''` and `G1'`. Each is available by adaptive
//! quadrature and by a rapidly convergent series.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{FctlError, Result};
use crate::quadrature::integrate_with_breaks;
use crate::special::{erfc, half_line_table};

/// Smallest `b` accepted by the G-kernels.
pub const MIN_B: f64 = 1e-3;

/// Upper end of the drift range where the zeta series converge, `2 sqrt(pi)`.
pub fn series_beta_limit() -> f64 {
    2.0 * PI.sqrt()
}

/// Members of the G-integral family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GKernel {
    G0,
    G1,
    G2,
    G3,
    G4,
    G0Prime,
    G0Second,
    G1Prime,
}

impl GKernel {
    pub const ALL: [GKernel; 8] = [
        GKernel::G0,
        GKernel::G1,
        GKernel::G2,
        GKernel::G3,
        GKernel::G4,
        GKernel::G0Prime,
        GKernel::G0Second,
        GKernel::G1Prime,
    ];
}

fn check_b(b: f64) -> Result<()> {
    if !(b >= MIN_B) || !b.is_finite() {
        return Err(FctlError::domain(format!(
            "G-kernel argument b = {b} must be at least {MIN_B}"
        )));
    }
    Ok(())
}

/// Evaluates a G-kernel (series form).
pub fn g_kernel(kind: GKernel, b: f64) -> Result<f64> {
    g_kernel_series(kind, b)
}

/// Evaluates a G-kernel by adaptive quadrature of its defining integral on
/// `[0, sqrt(745 + b^2)]`, beyond which the integrand underflows.
pub fn g_kernel_quadrature(kind: GKernel, b: f64) -> Result<f64> {
    check_b(b)?;
    let b2 = b * b;
    let t_max = (745.0 + b2).sqrt();
    let integrand = move |t: f64| -> f64 {
        let t2 = t * t;
        let u = b2 + t2;
        let f = 1.0 / u.exp_m1();
        let f2 = f * (1.0 + f);
        match kind {
            GKernel::G0 => t2 / u * f,
            GKernel::G1 => f,
            GKernel::G2 => b2 / u * f,
            GKernel::G3 => t2 / (u * u) * f,
            GKernel::G4 => t2 / u * f2,
            GKernel::G0Prime => -2.0 * b * t2 * (f / (u * u) + f2 / u),
            GKernel::G0Second => {
                -2.0 * t2 * (f / (u * u) + f2 / u)
                    + 4.0
                        * b2
                        * t2
                        * (2.0 * f / (u * u * u) + 2.0 * f2 / (u * u) + f2 * (1.0 + 2.0 * f) / u)
            }
            GKernel::G1Prime => -2.0 * b * f2,
        }
    };
    let mut breaks = vec![0.0];
    for scale in [b, 4.0 * b] {
        if scale < t_max && scale > *breaks.last().unwrap() {
            breaks.push(scale);
        }
    }
    breaks.push(t_max);
    integrate_with_breaks(integrand, &breaks, 1e-300, 1e-14)
}

/// The four lattice sums the series forms are assembled from.
#[derive(Clone, Copy)]
enum Lattice {
    /// `k^(-1/2) e^(-s k)`
    InvSqrtExp,
    /// `k^(1/2) e^(-s k)`
    SqrtExp,
    /// `erfc(b sqrt(k))`
    Erfc,
    /// `k erfc(b sqrt(k))`
    KErfc,
}

/// `d^m/dx^m [x^a e^(-s x)]`.
fn power_exp_derivative(a: f64, s: f64, x: f64, m: u32) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut falling = 1.0;
    for j in 0..=m {
        total += binom * falling * x.powf(a - j as f64) * (-s).powi((m - j) as i32);
        binom *= (m - j) as f64 / (j + 1) as f64;
        falling *= a - j as f64;
    }
    total * (-s * x).exp()
}

impl Lattice {
    fn value(self, b: f64, x: f64) -> f64 {
        let s = b * b;
        match self {
            Lattice::InvSqrtExp => (-s * x).exp() / x.sqrt(),
            Lattice::SqrtExp => x.sqrt() * (-s * x).exp(),
            Lattice::Erfc => erfc(b * x.sqrt()),
            Lattice::KErfc => x * erfc(b * x.sqrt()),
        }
    }

    fn derivative(self, b: f64, x: f64, m: u32) -> f64 {
        let s = b * b;
        let erfc_derivative = |m: u32| -> f64 {
            if m == 0 {
                erfc(b * x.sqrt())
            } else {
                -b / PI.sqrt() * power_exp_derivative(-0.5, s, x, m - 1)
            }
        };
        match self {
            Lattice::InvSqrtExp => power_exp_derivative(-0.5, s, x, m),
            Lattice::SqrtExp => power_exp_derivative(0.5, s, x, m),
            Lattice::Erfc => erfc_derivative(m),
            Lattice::KErfc => x * erfc_derivative(m) + m as f64 * erfc_derivative(m - 1),
        }
    }

    fn tail_integral(self, b: f64, n: f64) -> f64 {
        let s = b * b;
        let sqrt_pi = PI.sqrt();
        let u0 = b * n.sqrt();
        let e0 = (-u0 * u0).exp();
        let c0 = erfc(u0);
        match self {
            Lattice::InvSqrtExp => (PI / s).sqrt() * c0,
            Lattice::SqrtExp => s.powf(-1.5) * (u0 * e0 + 0.5 * sqrt_pi * c0),
            Lattice::Erfc => {
                2.0 / s * (-0.5 * u0 * u0 * c0 + u0 * e0 / (2.0 * sqrt_pi) + 0.25 * c0)
            }
            Lattice::KErfc => {
                let u3 = u0 * u0 * u0;
                let inner = 0.5 * u3 * e0 + 1.5 * (0.5 * u0 * e0 + 0.25 * sqrt_pi * c0);
                2.0 / (s * s) * (-0.25 * u0 * u3 * c0 + inner / (2.0 * sqrt_pi))
            }
        }
    }

    /// `sum_{k >= 1} f(k)`: direct terms up to `N`, then an Euler-Maclaurin tail.
    fn sum(self, b: f64) -> f64 {
        const N: usize = 256;
        let peak = 1.0 / (2.0 * b * b);
        let mut total = 0.0;
        for k in 1..N {
            let term = self.value(b, k as f64);
            total += term;
            if (k as f64) > peak && term.abs() <= 1e-18 * total.abs() {
                return total;
            }
        }
        let n = N as f64;
        total + self.tail_integral(b, n) + 0.5 * self.value(b, n) - self.derivative(b, n, 1) / 12.0
            + self.derivative(b, n, 3) / 720.0
            - self.derivative(b, n, 5) / 30240.0
    }
}

/// Evaluates a G-kernel through its lattice-sum series.
pub fn g_kernel_series(kind: GKernel, b: f64) -> Result<f64> {
    check_b(b)?;
    let sqrt_pi = PI.sqrt();
    let value = match kind {
        GKernel::G0 => {
            0.5 * sqrt_pi * Lattice::InvSqrtExp.sum(b) - 0.5 * PI * b * Lattice::Erfc.sum(b)
        }
        GKernel::G1 => 0.5 * sqrt_pi * Lattice::InvSqrtExp.sum(b),
        GKernel::G2 => 0.5 * PI * b * Lattice::Erfc.sum(b),
        GKernel::G3 => {
            PI / (4.0 * b) * Lattice::Erfc.sum(b) + 0.5 * PI * b * Lattice::KErfc.sum(b)
                - 0.5 * sqrt_pi * Lattice::SqrtExp.sum(b)
        }
        GKernel::G4 => {
            0.5 * sqrt_pi * Lattice::SqrtExp.sum(b) - 0.5 * PI * b * Lattice::KErfc.sum(b)
        }
        GKernel::G0Prime => -0.5 * PI * Lattice::Erfc.sum(b),
        GKernel::G0Second => sqrt_pi * Lattice::SqrtExp.sum(b),
        GKernel::G1Prime => -sqrt_pi * b * Lattice::SqrtExp.sum(b),
    };
    Ok(value)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(FctlError::domain(format!(
            "drift beta = {beta} must be positive"
        )));
    }
    Ok(())
}

/// Sums `sum_r coeff(r) * zeta_r * x^r / r!` over the cached zeta table.
/// Returns `None` when the terms have not died out by the end of the table.
fn zeta_series(
    beta: f64,
    pick: impl Fn((f64, f64)) -> f64,
    coeff: impl Fn(f64) -> f64,
) -> Option<f64> {
    let x = -beta * beta / 2.0;
    let ratio = beta * beta / (4.0 * PI);
    if ratio >= 1.0 {
        return None;
    }
    let mut power = 1.0;
    let mut total = 0.0;
    for (r, &pair) in half_line_table().iter().enumerate() {
        if r > 0 {
            power *= x / r as f64;
        }
        let term = pick(pair) * power * coeff(r as f64);
        total += term;
        if r >= 8 && term.abs() / (1.0 - ratio) < 1e-16 * total.abs().max(1.0) {
            return Some(total);
        }
    }
    None
}

fn mean_max_series(beta: f64) -> Option<f64> {
    let (zeta_half, _) = half_line_table()[0];
    let sqrt_2pi = (2.0 * PI).sqrt();
    let tail = zeta_series(beta, |p| p.1, |r| 1.0 / ((2.0 * r + 1.0) * (2.0 * r + 2.0)))?;
    Some(1.0 / (2.0 * beta) + zeta_half / sqrt_2pi + beta / 4.0 + beta * beta / sqrt_2pi * tail)
}

/// `E[M_beta]`.
///
/// Uses the zeta series for `0 < beta < 2 sqrt(pi)` and `(sqrt 2 / pi) G0(beta / sqrt 2)`
/// where that series is unavailable or too slow.
pub fn mean_max(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta < series_beta_limit() {
        if let Some(v) = mean_max_series(beta) {
            return Ok(v);
        }
    }
    mean_max_g0(beta)
}

/// `E[M_beta] = (sqrt 2 / pi) G0(beta / sqrt 2)`.
pub fn mean_max_g0(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(SQRT_2 / PI * g_kernel(GKernel::G0, beta / SQRT_2)?)
}

/// `P(M_beta = 0)` from the zeta series.
///
/// The series diverges for `beta >= 2 sqrt(pi)`; use [`prob_zero_max_integral`] there.
pub fn prob_zero_max(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta >= series_beta_limit() {
        return Err(FctlError::domain(format!(
            "the zeta series for P(M=0) needs beta < 2 sqrt(pi), got {beta}; use the integral form"
        )));
    }
    match zeta_series(beta, |p| p.0, |r| 1.0 / (2.0 * r + 1.0)) {
        Some(s) => Ok(SQRT_2 * beta * (beta / (2.0 * PI).sqrt() * s).exp()),
        None => prob_zero_max_integral(beta),
    }
}

/// `ln(1 - exp(-beta^2/2 - v^2/2))`.
fn log_gap(beta: f64, v: f64) -> f64 {
    (-(-0.5 * (beta * beta + v * v)).exp_m1()).ln()
}

/// `P(M_beta = 0) = exp((1/2pi) int beta/(beta^2+v^2) ln(1 - e^{-beta^2/2 - v^2/2}) dv)`.
pub fn prob_zero_max_integral(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let f = |v: f64| beta / (beta * beta + v * v) * log_gap(beta, v);
    let breaks = integration_breaks(beta);
    let half = integrate_with_breaks(f, &breaks, 1e-15, 1e-14)?;
    Ok((half / PI).exp())
}

fn integration_breaks(beta: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    for p in [beta, 4.0 * beta, 8.0] {
        if p > *breaks.last().unwrap() && p < 40.0 {
            breaks.push(p);
        }
    }
    breaks.push(40.0);
    breaks
}

/// Moment generating function `E[exp(t M_beta)]` for `Re t < beta`.
pub fn mgf_max(beta: f64, t: Complex64) -> Result<Complex64> {
    check_beta(beta)?;
    if t.re >= beta {
        return Err(FctlError::domain(format!(
            "mgf of M_beta needs Re t < beta, got Re t = {} with beta = {beta}",
            t.re
        )));
    }
    let f = |v: f64| {
        let u = Complex64::new(beta, v);
        t / (u * (t - u)) * log_gap(beta, v)
    };
    let breaks = integration_breaks(beta);
    let positive = integrate_with_breaks(f, &breaks, 1e-15, 1e-14)?;
    let negative = integrate_with_breaks(|v: f64| f(-v), &breaks, 1e-15, 1e-14)?;
    Ok(((positive + negative) / (2.0 * PI)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn series_matches_quadrature() {
        for &b in &[0.05, 0.1, 0.3, 0.7, 1.0, 2.0, 3.5, 5.0] {
            for kind in GKernel::ALL {
                let s = g_kernel_series(kind, b).unwrap();
                let q = g_kernel_quadrature(kind, b).unwrap();
                assert!(
                    rel(s, q) < 1e-10,
                    "{kind:?} at b={b}: series {s} quadrature {q}"
                );
            }
        }
    }

    #[test]
    fn g0_at_table_point() {
        let v = g_kernel(GKernel::G0, 0.1 / SQRT_2).unwrap();
        assert!((v - 9.868).abs() < 5e-3, "{v}");
    }

    #[test]
    fn identities() {
        for &b in &[0.1, 0.5, 0.7, 1.0, 2.0] {
            let g0 = g_kernel(GKernel::G0, b).unwrap();
            let g1 = g_kernel(GKernel::G1, b).unwrap();
            let g2 = g_kernel(GKernel::G2, b).unwrap();
            let g3 = g_kernel(GKernel::G3, b).unwrap();
            let g4 = g_kernel(GKernel::G4, b).unwrap();
            assert!(rel(g0 + g2, g1) < 1e-12);
            assert!(rel(g3 + g4, g2 / (2.0 * b * b)) < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &b in &[0.2, 0.7, 1.5] {
            let d = |k: GKernel| {
                (g_kernel(k, b + h).unwrap() - g_kernel(k, b - h).unwrap()) / (2.0 * h)
            };
            assert!(rel(d(GKernel::G0), g_kernel(GKernel::G0Prime, b).unwrap()) < 1e-7);
            assert!(rel(d(GKernel::G0Prime), g_kernel(GKernel::G0Second, b).unwrap()) < 1e-7);
            assert!(rel(d(GKernel::G1), g_kernel(GKernel::G1Prime, b).unwrap()) < 1e-7);
        }
    }

    #[test]
    fn g0_prime_negative_and_increasing() {
        let mut last = f64::NEG_INFINITY;
        for i in 1..200 {
            let v = g_kernel(GKernel::G0Prime, 0.025 * i as f64).unwrap();
            assert!(v < 0.0 && v > last);
            last = v;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            g_kernel(GKernel::G0, 0.0),
            Err(FctlError::Domain(_))
        ));
        assert!(g_kernel(GKernel::G0, 5e-4).is_err());
        assert!(mean_max(-1.0).is_err());
        assert!(prob_zero_max(0.0).is_err());
        assert!(prob_zero_max(3.6).is_err());
        assert!(prob_zero_max_integral(3.6).is_ok());
        assert!(mgf_max(1.0, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn mean_max_values() {
        // leading terms at beta = 0.1
        let v = mean_max(0.1).unwrap();
        assert!((v - 4.4424).abs() < 5e-4, "{v}");
        for &beta in &[0.1, 0.5, 1.0, 2.0] {
            let series = mean_max_series(beta).unwrap();
            let g0 = mean_max_g0(beta).unwrap();
            assert!((series - g0).abs() < 1e-8, "beta={beta}: {series} vs {g0}");
        }
        let v = mean_max(0.05).unwrap();
        assert!((v - 10.0).abs() / 10.0 < 0.2);
    }

    #[test]
    fn prob_zero_values() {
        assert!((prob_zero_max(0.1).unwrap() - 0.1334).abs() < 5e-5);
        assert!((prob_zero_max(1.0).unwrap() - 0.8005).abs() < 5e-5);
        assert!(prob_zero_max(2.0).unwrap() > prob_zero_max(1.0).unwrap());
        for &beta in &[0.1, 0.5, 1.0, 2.0, 3.0] {
            let s = prob_zero_max(beta).unwrap();
            let i = prob_zero_max_integral(beta).unwrap();
            assert!((s - i).abs() < 1e-8, "beta={beta}: {s} vs {i}");
        }
    }

    #[test]
    fn monotone_in_beta() {
        let mut last_mean = f64::INFINITY;
        let mut last_p = 0.0;
        for i in 0..60 {
            let beta = 0.05 + 0.05 * i as f64;
            let m = mean_max(beta).unwrap();
            let p = prob_zero_max(beta).unwrap();
            assert!(m < last_mean && p > last_p, "beta={beta}");
            last_mean = m;
            last_p = p;
        }
    }

    #[test]
    fn mgf_properties() {
        let one = mgf_max(1.0, Complex64::new(0.0, 0.0)).unwrap();
        assert!((one - 1.0).norm() < 1e-14);
        let h = 1e-5;
        let up = mgf_max(1.0, Complex64::new(h, 0.0)).unwrap();
        let down = mgf_max(1.0, Complex64::new(-h, 0.0)).unwrap();
        let derivative = (up - down).re / (2.0 * h);
        assert!((derivative - mean_max(1.0).unwrap()).abs() < 1e-6);
        let far = mgf_max(1.0, Complex64::new(-1e7, 0.0)).unwrap();
        assert!((far.re - prob_zero_max(1.0).unwrap()).abs() < 1e-6);
    }
}
