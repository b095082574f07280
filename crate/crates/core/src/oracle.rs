//! Independent ground truth for integer cycles: the slot-level Markov chain of
//! the queue observed at the end of each green period, plus a Monte Carlo
//! simulator.
//!
//! Slot dynamics from queue length `q`:
//! red slot `q -> q + A`; green slot `q -> q - 1 + A` when `q > 0` and `0 -> 0`
//! (arrivals to an empty queue pass through). A cycle is `c - g` red slots
//! followed by `g` green slots.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FctlError, Result};
use crate::transform::{FctlInstance, GreenTime};

/// Truncation and convergence settings of the chain solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Number of states tried first.
    pub initial_states: usize,
    /// Hard cap on the number of states.
    pub max_states: usize,
    /// Bound on stationary tail mass and on probability lost to truncation.
    pub tail_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            initial_states: 64,
            max_states: 4096,
            tail_tolerance: 1e-12,
        }
    }
}

/// Stationary distribution of the end-of-green queue.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub pmf: Vec<f64>,
    /// Number of states of the truncated chain.
    pub states: usize,
    /// Stationary-weighted probability that a cycle touched the truncation level.
    pub leakage: f64,
}

impl OracleSolution {
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(j, p)| (j as f64).powi(k) * p)
            .sum()
    }
}

fn integer_cycle(inst: &FctlInstance) -> Result<usize> {
    let c = inst.cycle();
    if (c - c.round()).abs() > 1e-9 {
        return Err(FctlError::invalid(format!(
            "the Markov-chain oracle needs an integer cycle, got {c}"
        )));
    }
    Ok(c.round() as usize)
}

/// Arrival pmf truncated where the tail is negligible, with the residual mass
/// folded into the last entry so every row sums to one.
fn arrival_pmf(inst: &FctlInstance) -> Vec<f64> {
    let mut a = inst.arrival().pmf_vector(1e-18);
    let total: f64 = a.iter().sum();
    if let Some(last) = a.last_mut() {
        *last += (1.0 - total).max(0.0);
    }
    a
}

/// Distribution after one cycle started from state `start`; returns the
/// mass that was pushed into the top state from beyond it.
fn propagate_cycle(
    start: usize,
    a: &[f64],
    red: usize,
    green: usize,
    n: usize,
    out: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) -> f64 {
    out.clear();
    out.resize(n, 0.0);
    out[start] = 1.0;
    let mut hi = start;
    let mut clipped = 0.0;
    for slot in 0..red + green {
        let is_green = slot >= red;
        scratch.clear();
        scratch.resize(n, 0.0);
        let mut new_hi = 0;
        for (q, &v) in out[..=hi].iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            if is_green && q == 0 {
                scratch[0] += v;
                continue;
            }
            let base = if is_green { q - 1 } else { q };
            for (j, &p) in a.iter().enumerate() {
                let target = base + j;
                if target >= n - 1 {
                    let rest: f64 = a[j..].iter().sum::<f64>() * v;
                    scratch[n - 1] += rest;
                    clipped += if target > n - 1 { rest } else { rest - p * v };
                    new_hi = n - 1;
                    break;
                }
                scratch[target] += p * v;
                new_hi = new_hi.max(target);
            }
        }
        std::mem::swap(out, scratch);
        hi = new_hi;
    }
    clipped
}

/// Dense cycle operator for a deterministic green of `g` slots, together
/// with the per-row truncation losses.
fn cycle_matrix(a: &[f64], c: usize, g: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = vec![0.0; n * n];
    let mut clipped = vec![0.0; n];
    let mut row = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(n);
    for q in 0..n {
        clipped[q] = propagate_cycle(q, a, c - g, g, n, &mut row, &mut scratch);
        m[q * n..(q + 1) * n].copy_from_slice(&row);
    }
    (m, clipped)
}

/// Stationary vector of a row-stochastic matrix by the Grassmann-Taksar-Heyman
/// elimination, which avoids subtractive cancellation.
fn gth(mut p: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for k in (1..n).rev() {
        let s: f64 = p[k * n..k * n + k].iter().sum();
        if !(s > 0.0) {
            return Err(FctlError::numeric(format!(
                "state {k} cannot move to a lower state; the chain is reducible"
            )));
        }
        for i in 0..k {
            p[i * n + k] /= s;
        }
        for i in 0..k {
            let pik = p[i * n + k];
            if pik == 0.0 {
                continue;
            }
            for j in 0..k {
                p[i * n + j] += pik * p[k * n + j];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * p[i * n + k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

fn power_polish(pi: &mut Vec<f64>, m: &[f64], n: usize) {
    for _ in 0..500 {
        let mut next = vec![0.0; n];
        for (i, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (slot, &p) in next.iter_mut().zip(&m[i * n..(i + 1) * n]) {
                *slot += w * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = next.iter().zip(pi.iter()).map(|(a, b)| (a - b).abs()).sum();
        *pi = next;
        if change < 1e-13 {
            return;
        }
    }
}

/// Stationary end-of-green queue distribution, growing the truncation until
/// the tail and the truncation losses are below `1e-12`.
pub fn stationary_overflow(inst: &FctlInstance) -> Result<Vec<f64>> {
    Ok(solve(inst, &OracleOptions::default())?.pmf)
}

/// [`stationary_overflow`] with explicit options and diagnostics.
pub fn solve(inst: &FctlInstance, options: &OracleOptions) -> Result<OracleSolution> {
    let c = integer_cycle(inst)?;
    let a = arrival_pmf(inst);
    let mut n = options.initial_states.max(8);
    loop {
        if n > options.max_states {
            return Err(FctlError::Resource(format!(
                "oracle truncation would exceed {} states",
                options.max_states
            )));
        }
        let (m, clipped) = match inst.green() {
            GreenTime::Deterministic { g } => cycle_matrix(&a, c, g as usize, n),
            GreenTime::Randomized { floor, ceil, p } => {
                let (m0, c0) = cycle_matrix(&a, c, floor as usize, n);
                if p >= 1.0 {
                    (m0, c0)
                } else {
                    let (m1, c1) = cycle_matrix(&a, c, ceil as usize, n);
                    let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
                        x.iter()
                            .zip(y)
                            .map(|(u, v)| p * u + (1.0 - p) * v)
                            .collect()
                    };
                    (mix(&m0, &m1), mix(&c0, &c1))
                }
            }
        };
        let mut pi = gth(m.clone(), n)?;
        power_polish(&mut pi, &m, n);
        let tail: f64 = pi[3 * n / 4..].iter().sum();
        let leakage: f64 = pi.iter().zip(&clipped).map(|(p, l)| p * l).sum();
        if tail < options.tail_tolerance && leakage < options.tail_tolerance {
            let last = pi.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            pi.truncate(last + 1);
            return Ok(OracleSolution {
                pmf: pi,
                states: n,
                leakage,
            });
        }
        n *= 2;
    }
}

/// Monte Carlo summary of the end-of-green queue.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationStats {
    pub cycles: u64,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the mean from 100 batch means.
    pub std_error: f64,
}

/// Simulates `cycles` cycles after a burn-in, deterministically for a given seed.
pub fn simulate(inst: &FctlInstance, cycles: u64, seed: u64) -> Result<SimulationStats> {
    let c = integer_cycle(inst)?;
    if cycles < 100 {
        return Err(FctlError::invalid("simulation needs at least 100 cycles"));
    }
    let a = arrival_pmf(inst);
    let arrivals = WeightedIndex::new(&a)
        .map_err(|e| FctlError::invalid(format!("arrival pmf cannot be sampled: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let green = inst.green();
    let burn_in = 1000u64;
    let batches = 100u64;
    let per_batch = cycles / batches;
    let mut q: u64 = 0;
    let mut batch_means = Vec::with_capacity(batches as usize);
    let (mut sum, mut sum_sq, mut batch_sum, mut counted) = (0.0, 0.0, 0.0, 0u64);
    for cycle in 0..burn_in + per_batch * batches {
        let g = match green {
            GreenTime::Deterministic { g } => g as usize,
            GreenTime::Randomized { floor, ceil, p } => {
                if rng.gen::<f64>() < p {
                    floor as usize
                } else {
                    ceil as usize
                }
            }
        };
        for _ in 0..c - g {
            q += arrivals.sample(&mut rng) as u64;
        }
        for _ in 0..g {
            if q > 0 {
                q = q - 1 + arrivals.sample(&mut rng) as u64;
            } else {
                // arrivals to an empty queue still have to be drawn to keep
                // the random stream aligned with the slot sequence
                arrivals.sample(&mut rng);
            }
        }
        if cycle < burn_in {
            continue;
        }
        let x = q as f64;
        sum += x;
        sum_sq += x * x;
        batch_sum += x;
        counted += 1;
        if counted % per_batch == 0 {
            batch_means.push(batch_sum / per_batch as f64);
            batch_sum = 0.0;
        }
    }
    let n = counted as f64;
    let mean = sum / n;
    let variance = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let b = batch_means.len() as f64;
    let batch_var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (b - 1.0);
    Ok(SimulationStats {
        cycles: counted,
        mean,
        variance,
        std_error: (batch_var / b).sqrt(),
    })
}
