//! Per-slot arrival distributions.
//!
//! Every model exposes its probability generating function `Y(z)` on the
//! complex plane, analytic derivatives up to third order, and the first three
//! raw moments. Geometric and negative binomial models are supported on
//! `{0, 1, 2, ...}` and are parameterised by their mean (and variance).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FctlError, Result};

/// Which family an [`ArrivalModel`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalKind {
    Poisson,
    Geometric,
    NegativeBinomial,
    Custom,
}

/// JSON representation of an arrival model.
///
/// `{"kind":"poisson","mean":0.3}`, `{"kind":"geometric","mean":0.4}`,
/// `{"kind":"negative_binomial","mean":0.1,"variance":0.4}`,
/// `{"kind":"custom","pmf":[0.7,0.2,0.1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    Poisson { mean: f64 },
    Geometric { mean: f64 },
    NegativeBinomial { mean: f64, variance: f64 },
    Custom { pmf: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Poisson {
        mean: f64,
    },
    /// `p` is the success probability, `q = 1 - p`.
    Geometric {
        p: f64,
        q: f64,
    },
    NegativeBinomial {
        p: f64,
        q: f64,
        r: f64,
    },
    Custom {
        pmf: Vec<f64>,
    },
}

/// A per-slot arrival distribution. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrivalSpec", into = "ArrivalSpec")]
pub struct ArrivalModel {
    family: Family,
    mean: f64,
    variance: f64,
    third_moment: f64,
}

impl ArrivalModel {
    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(FctlError::invalid(format!(
                "poisson mean must be positive, got {mean}"
            )));
        }
        let family = Family::Poisson { mean };
        Ok(Self::from_family(family))
    }

    /// Geometric distribution on `{0, 1, ...}` with the given mean,
    /// `Y(z) = p / (1 - (1-p) z)` with `p = 1 / (1 + mean)`.
    pub fn geometric(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(FctlError::invalid(format!(
                "geometric mean must be positive, got {mean}"
            )));
        }
        let p = 1.0 / (1.0 + mean);
        let family = Family::Geometric {
            p,
            q: mean / (1.0 + mean),
        };
        Ok(Self::from_family(family))
    }

    /// Negative binomial `Y(z) = (p / (1 - (1-p) z))^r` matched to a mean and
    /// a variance; the variance must exceed the mean.
    pub fn negative_binomial(mean: f64, variance: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(FctlError::invalid(format!(
                "negative binomial mean must be positive, got {mean}"
            )));
        }
        if !(variance > mean && variance.is_finite()) {
            return Err(FctlError::invalid(format!(
                "negative binomial variance must exceed the mean ({variance} <= {mean})"
            )));
        }
        let p = mean / variance;
        let q = 1.0 - p;
        let r = mean * mean / (variance - mean);
        Ok(Self::from_family(Family::NegativeBinomial { p, q, r }))
    }

    /// Finite-support distribution with probabilities on `0..pmf.len()`.
    pub fn custom(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(FctlError::invalid("custom pmf is empty"));
        }
        if pmf.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(FctlError::invalid(
                "custom pmf has negative or non-finite entries",
            ));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(FctlError::invalid(format!(
                "custom pmf sums to {total}, not 1"
            )));
        }
        let pmf: Vec<f64> = pmf.iter().map(|p| p / total).collect();
        let model = Self::from_family(Family::Custom { pmf });
        if !(model.mean > 0.0) || !(model.variance > 0.0) {
            return Err(FctlError::invalid(
                "custom pmf must have positive mean and positive variance",
            ));
        }
        Ok(model)
    }

    fn from_family(family: Family) -> Self {
        let (d1, d2, d3) = match &family {
            Family::Custom { pmf } => {
                let mut m = [0.0; 3];
                for (k, &p) in pmf.iter().enumerate() {
                    let k = k as f64;
                    m[0] += p * k;
                    m[1] += p * k * (k - 1.0);
                    m[2] += p * k * (k - 1.0) * (k - 2.0);
                }
                (m[0], m[1], m[2])
            }
            _ => {
                let one = Complex64::new(1.0, 0.0);
                (
                    family_derivative(&family, one, 1).re,
                    family_derivative(&family, one, 2).re,
                    family_derivative(&family, one, 3).re,
                )
            }
        };
        let mean = d1;
        let variance = d2 + d1 - d1 * d1;
        let third_moment = d3 + 3.0 * d2 + d1;
        Self {
            family,
            mean,
            variance,
            third_moment,
        }
    }

    pub fn kind(&self) -> ArrivalKind {
        match self.family {
            Family::Poisson { .. } => ArrivalKind::Poisson,
            Family::Geometric { .. } => ArrivalKind::Geometric,
            Family::NegativeBinomial { .. } => ArrivalKind::NegativeBinomial,
            Family::Custom { .. } => ArrivalKind::Custom,
        }
    }

    /// Mean number of arrivals per slot, `Y'(1)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Raw third moment `E[Y^3]`.
    pub fn third_moment(&self) -> f64 {
        self.third_moment
    }

    /// Radius of the disk around the origin in which the PGF is analytic.
    pub fn radius(&self) -> f64 {
        match self.family {
            Family::Poisson { .. } | Family::Custom { .. } => f64::INFINITY,
            Family::Geometric { q, .. } | Family::NegativeBinomial { q, .. } => 1.0 / q,
        }
    }

    fn check_domain(&self, z: Complex64) -> Result<()> {
        let radius = self.radius();
        if z.norm() >= radius {
            return Err(FctlError::domain(format!(
                "|z| = {} lies outside the PGF's disk of analyticity (radius {radius})",
                z.norm()
            )));
        }
        Ok(())
    }

    /// `Y(z)`.
    pub fn pgf(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        Ok(self.pgf_unchecked(z))
    }

    /// Analytic derivative `Y^(order)(z)` for `order <= 3`.
    pub fn pgf_derivative(&self, z: Complex64, order: u32) -> Result<Complex64> {
        if order > 3 {
            return Err(FctlError::invalid(format!(
                "PGF derivatives are available up to order 3, requested {order}"
            )));
        }
        self.check_domain(z)?;
        Ok(family_derivative(&self.family, z, order))
    }

    /// Principal-branch logarithm of `Y(z)`, continued analytically from `z = 1`.
    ///
    /// Non-integer powers are defined through this: `Y(z)^c = exp(c ln Y(z))`.
    pub fn ln_pgf(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        Ok(self.ln_pgf_unchecked(z))
    }

    pub(crate) fn pgf_unchecked(&self, z: Complex64) -> Complex64 {
        family_derivative(&self.family, z, 0)
    }

    pub(crate) fn ln_pgf_unchecked(&self, z: Complex64) -> Complex64 {
        match &self.family {
            Family::Poisson { mean } => (z - 1.0) * *mean,
            Family::Geometric { p, q } => p.ln() - (1.0 - z * *q).ln(),
            Family::NegativeBinomial { p, q, r } => (p.ln() - (1.0 - z * *q).ln()) * *r,
            Family::Custom { .. } => self.pgf_unchecked(z).ln(),
        }
    }

    /// `Y'(z) / Y(z)`.
    pub(crate) fn log_derivative_unchecked(&self, z: Complex64) -> Complex64 {
        match &self.family {
            Family::Poisson { mean } => Complex64::new(*mean, 0.0),
            Family::Geometric { q, .. } => *q / (1.0 - z * *q),
            Family::NegativeBinomial { q, r, .. } => *r * *q / (1.0 - z * *q),
            Family::Custom { .. } => {
                family_derivative(&self.family, z, 1) / family_derivative(&self.family, z, 0)
            }
        }
    }

    pub(crate) fn derivative_unchecked(&self, z: Complex64, order: u32) -> Complex64 {
        family_derivative(&self.family, z, order)
    }

    /// `P(Y = k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        match &self.family {
            Family::Poisson { mean } => {
                let mut log_p = -mean + k as f64 * mean.ln();
                for j in 2..=k {
                    log_p -= (j as f64).ln();
                }
                log_p.exp()
            }
            Family::Geometric { p, q } => p * q.powi(k as i32),
            Family::NegativeBinomial { p, q, r } => {
                // (r)_k / k! * p^r q^k, built as a product to stay in range
                let mut term = p.powf(*r);
                for j in 0..k {
                    term *= (r + j as f64) / (j as f64 + 1.0) * q;
                }
                term
            }
            Family::Custom { pmf } => pmf.get(k).copied().unwrap_or(0.0),
        }
    }

    /// Probabilities `P(Y = 0), P(Y = 1), ...` truncated once the remaining tail
    /// mass drops below `tail`. At least two entries are always returned.
    pub fn pmf_vector(&self, tail: f64) -> Vec<f64> {
        if let Family::Custom { pmf } = &self.family {
            return pmf.clone();
        }
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let p = self.pmf(k);
            out.push(p);
            // bound on p_{j+1}/p_j for every j >= k
            let ratio = match self.family {
                Family::Poisson { mean } => mean / (k as f64 + 1.0),
                Family::Geometric { q, .. } => q,
                Family::NegativeBinomial { q, r, .. } => {
                    q * ((r + k as f64) / (k as f64 + 1.0)).max(1.0)
                }
                Family::Custom { .. } => unreachable!(),
            };
            k += 1;
            let past_mean = k as f64 > self.mean + 1.0;
            if (past_mean && k >= 2 && ratio < 1.0 && p * ratio / (1.0 - ratio) < tail)
                || k > 100_000
            {
                break;
            }
        }
        out
    }

    pub fn to_spec(&self) -> ArrivalSpec {
        match &self.family {
            Family::Poisson { mean } => ArrivalSpec::Poisson { mean: *mean },
            Family::Geometric { .. } => ArrivalSpec::Geometric { mean: self.mean },
            Family::NegativeBinomial { .. } => ArrivalSpec::NegativeBinomial {
                mean: self.mean,
                variance: self.variance,
            },
            Family::Custom { pmf } => ArrivalSpec::Custom { pmf: pmf.clone() },
        }
    }
}

fn family_derivative(family: &Family, z: Complex64, order: u32) -> Complex64 {
    match family {
        Family::Poisson { mean } => ((z - 1.0) * *mean).exp() * mean.powi(order as i32),
        Family::Geometric { p, q } => {
            // p k! q^k (1 - qz)^(-k-1)
            let base = 1.0 - z * *q;
            let factorial: f64 = (1..=order).map(f64::from).product();
            *p * factorial * q.powi(order as i32) * base.powi(-(order as i32) - 1)
        }
        Family::NegativeBinomial { p, q, r } => {
            // p^r (r)_k q^k (1 - qz)^(-r-k)
            let base = 1.0 - z * *q;
            let rising: f64 = (0..order).map(|j| r + f64::from(j)).product();
            p.powf(*r) * rising * q.powi(order as i32) * base.powf(-r - f64::from(order))
        }
        Family::Custom { pmf } => {
            // Horner on the differentiated polynomial
            let k0 = order as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (k0..pmf.len()).rev() {
                let falling: f64 = (0..k0).map(|j| (k - j) as f64).product();
                acc = acc * z + pmf[k] * falling;
            }
            acc
        }
    }
}

impl TryFrom<ArrivalSpec> for ArrivalModel {
    type Error = FctlError;

    fn try_from(spec: ArrivalSpec) -> Result<Self> {
        match spec {
            ArrivalSpec::Poisson { mean } => ArrivalModel::poisson(mean),
            ArrivalSpec::Geometric { mean } => ArrivalModel::geometric(mean),
            ArrivalSpec::NegativeBinomial { mean, variance } => {
                ArrivalModel::negative_binomial(mean, variance)
            }
            ArrivalSpec::Custom { pmf } => ArrivalModel::custom(pmf),
        }
    }
}

impl From<ArrivalModel> for ArrivalSpec {
    fn from(model: ArrivalModel) -> Self {
        model.to_spec()
    }
}
