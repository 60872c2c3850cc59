use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sliding window of the most recent values; the oldest is evicted first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHistory {
    values: VecDeque<f64>,
    window: usize,
}

impl SampleHistory {
    pub const DEFAULT_WINDOW: usize = 50;

    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("history window must be at least 1"));
        }
        Ok(SampleHistory {
            values: VecDeque::with_capacity(window),
            window,
        })
    }

    pub fn push(&mut self, value: f64) {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }
}

impl Default for SampleHistory {
    fn default() -> Self {
        SampleHistory::new(Self::DEFAULT_WINDOW).expect("non-zero default window")
    }
}

/// Empirical CDF `(1/n) * #{y_i <= x}`.
pub fn ecdf_eval(samples: &[f64], x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("ecdf of an empty sample"));
    }
    let count = samples.iter().filter(|&&y| y <= x).count();
    Ok(count as f64 / samples.len() as f64)
}

/// Probability integral transform through a known CDF.
pub fn pit_known_cdf(cdf: impl Fn(f64) -> f64, x: f64) -> f64 {
    cdf(x).clamp(0.0, 1.0)
}

/// Randomized empirical transform of `x` against the owner's previous raw costs:
/// `(#{prior < x} + lambda * (1 + #{prior = x})) / (k + 1)`.
///
/// The `+1` counts `x` itself, so for `lambda` in (0, 1) the output never
/// reaches 0 or 1.
pub fn pit_empirical(prior: &[f64], x: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let below = prior.iter().filter(|&&p| p < x).count();
    let ties = prior.iter().filter(|&&p| p == x).count();
    Ok((below as f64 + lambda * (1 + ties) as f64) / (prior.len() + 1) as f64)
}

/// CDF of the minimum of `n - 1` iid U(0,1) values, i.e. Beta(1, n-1).
pub fn beta_min_cdf(n: usize, y: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!(
            "aggregated player needs n >= 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("y must lie in [0, 1], got {y}")));
    }
    Ok(1.0 - (1.0 - y).powi(n as i32 - 1))
}
