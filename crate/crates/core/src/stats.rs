//! Streaming mean/variance with a deterministic pairwise merge.

use serde::{Deserialize, Serialize};

/// Welford accumulator. Two accumulators merge exactly (Chan et al.), so a
/// fixed reduction tree gives bit-identical results regardless of how the
/// samples were produced.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_value(x: f64) -> Self {
        Self {
            count: 1,
            mean: x,
            m2: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.count as f64 / count as f64);
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64 / count as f64);
        Self { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            std_error: self.std_error(),
            samples: self.count,
        }
    }
}

/// Reduce per-sample values in index order with a balanced pairwise tree.
pub fn pairwise_accumulate(values: &[f64]) -> Accumulator {
    match values.len() {
        0 => Accumulator::new(),
        1 => Accumulator::from_value(values[0]),
        len => {
            let (lo, hi) = values.split_at(len / 2);
            pairwise_accumulate(lo).merge(&pairwise_accumulate(hi))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        pairwise_accumulate(values).estimate()
    }

    /// Distance to `reference` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.mean - reference).abs();
        if diff == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            diff / self.std_error
        }
    }

    pub fn agrees_with(&self, reference: f64, margin: f64) -> bool {
        self.z_score(reference) <= margin
    }
}

/// Wilson score interval half-width turned into a standard-error-like scale
/// for a binomial fraction; stays positive at 0 and 1.
pub fn wilson_std_error(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let z = 1.0;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (phat + z * z / (2.0 * n)) / denom;
    let half = z * ((phat * (1.0 - phat) + z * z / (4.0 * n)) / n).sqrt() / denom;
    (center, half)
}
