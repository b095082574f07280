//! Adaptive Gauss-Kronrod quadrature on finite intervals and the
//! point-doubling trapezoid rule for periodic integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{FctlError, Result};

/// Environment variable overriding the maximum number of contour points.
pub const QUADRATURE_MAX_ENV: &str = "FCTL_QUADRATURE_MAX";

/// Values the quadrature routines can accumulate.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: Integrand>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).magnitude())
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the total
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T: Integrand>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<T> {
    integrate_with_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// Like [`integrate`], with the interval pre-split at the given sorted points.
pub fn integrate_with_breaks<T: Integrand>(
    f: impl Fn(f64) -> T,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<T> {
    const MAX_SEGMENTS: usize = 5000;
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        for s in heap.iter() {
            total = total + s.value;
            err += s.error;
        }
        if !err.is_finite() || !total.magnitude().is_finite() {
            return Err(FctlError::numeric(
                "integrand is not finite on the interval",
            ));
        }
        if err <= abs_tol.max(rel_tol * total.magnitude()) {
            return Ok(total);
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(FctlError::numeric(format!(
                "adaptive quadrature did not converge (error estimate {err:.3e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            return Ok(total);
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

/// Controls the angular trapezoid rule used on circular contours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    /// Initial number of equispaced nodes.
    pub start_points: usize,
    /// Hard cap on the number of nodes.
    pub max_points: usize,
    /// Convergence threshold between successive doublings.
    pub tolerance: f64,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self {
            start_points: 256,
            max_points: 1 << 16,
            tolerance: 1e-12,
        }
    }
}

impl QuadraturePolicy {
    /// Default policy, with the point cap taken from `FCTL_QUADRATURE_MAX`
    /// when that variable holds a positive integer.
    pub fn from_env() -> Self {
        let mut policy = Self::default();
        if let Some(cap) = std::env::var(QUADRATURE_MAX_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
        {
            policy.max_points = cap;
            policy.start_points = policy.start_points.min(cap);
        }
        policy
    }
}

/// Trapezoid rule in angle over `[0, 2 pi)` for several periodic integrands at
/// once, doubling the node count until every output settles.
///
/// `node` is called with an angle and must add each integrand's value at that
/// angle into the accumulator slice. Returns the angular means
/// `(1/2pi) * integral` and the number of nodes used.
pub fn periodic_trapezoid(
    policy: &QuadraturePolicy,
    outputs: usize,
    mut node: impl FnMut(f64, &mut [Complex64]) -> Result<()>,
) -> Result<(Vec<Complex64>, usize)> {
    let mut n = policy.start_points.max(4);
    let mut sums = vec![Complex64::new(0.0, 0.0); outputs];
    let step = std::f64::consts::TAU / n as f64;
    for j in 0..n {
        node(j as f64 * step, &mut sums)?;
    }
    let mut previous: Vec<Complex64> = sums.iter().map(|s| s / n as f64).collect();
    while 2 * n <= policy.max_points {
        let step = std::f64::consts::TAU / (2 * n) as f64;
        for j in 0..n {
            node((2 * j + 1) as f64 * step, &mut sums)?;
        }
        n *= 2;
        let current: Vec<Complex64> = sums.iter().map(|s| s / n as f64).collect();
        let settled = current
            .iter()
            .zip(&previous)
            .all(|(c, p)| (c - p).norm() <= policy.tolerance * c.norm().max(1.0));
        previous = current;
        if settled {
            return Ok((previous, n));
        }
    }
    Err(FctlError::numeric(format!(
        "contour quadrature did not converge within {} points",
        policy.max_points
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_polynomials_and_peaks() {
        let v = integrate(|x: f64| x * x, 0.0, 3.0, 1e-14, 1e-14).unwrap();
        assert!((v - 9.0).abs() < 1e-13);
        let v = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-13).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let v = integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, PI, 1e-14, 1e-14).unwrap();
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn trapezoid_recovers_cauchy_coefficients() {
        // (1/2pi) int e^{e^{i t}} e^{-2 i t} dt = 1/2!
        let policy = QuadraturePolicy::default();
        let (vals, n) = periodic_trapezoid(&policy, 2, |t, acc| {
            let z = Complex64::from_polar(1.0, t);
            acc[0] += z.exp() / (z * z);
            acc[1] += z.exp();
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 512);
        assert!((vals[0] - 0.5).norm() < 1e-15);
        assert!((vals[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn trapezoid_reports_non_convergence() {
        let policy = QuadraturePolicy {
            start_points: 8,
            max_points: 16,
            tolerance: 1e-14,
        };
        let r = periodic_trapezoid(&policy, 1, |t, acc| {
            acc[0] += Complex64::new(1.0 / (1.01 - t.cos()), 0.0);
            Ok(())
        });
        assert!(matches!(r, Err(FctlError::Numeric(_))));
    }
}
