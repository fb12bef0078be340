//! Streaming raw-moment estimation with standard errors.

use serde::{Deserialize, Serialize};

/// Empirical `k`th raw moment with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    #[serde(rename = "samples")]
    pub sample_count: u64,
}

impl MomentEstimate {
    /// Standardized distance of `exact` from the estimate.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.mean - exact;
        if diff == 0.0 {
            0.0
        } else if self.std_error > 0.0 {
            diff / self.std_error
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Welford accumulator for `x, x², …, x^K` of one observable.
///
/// Non-finite observations are counted separately and do not enter the
/// moments. Merging follows Chan et al., so batch-wise accumulation merged
/// in a fixed order is reproducible.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    infinite: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(order: usize) -> Self {
        MomentAccumulator { count: 0, infinite: 0, mean: vec![0.0; order], m2: vec![0.0; order] }
    }

    pub fn order(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn infinite_count(&self) -> u64 {
        self.infinite
    }

    pub fn push(&mut self, x: f64) {
        if !x.is_finite() {
            self.infinite += 1;
            return;
        }
        self.count += 1;
        let inv_n = 1.0 / self.count as f64;
        let mut power = 1.0;
        for (mean, m2) in self.mean.iter_mut().zip(&mut self.m2) {
            power *= x;
            let delta = power - *mean;
            *mean += delta * inv_n;
            *m2 += delta * (power - *mean);
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        debug_assert_eq!(self.order(), other.order());
        self.infinite += other.infinite;
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            self.count = other.count;
            self.mean.clone_from(&other.mean);
            self.m2.clone_from(&other.m2);
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for k in 0..self.order() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    /// Estimates for `k = 1..=K`. The standard error is the sample standard
    /// deviation of `x^k` over `√n`; it is infinite with fewer than two
    /// observations.
    pub fn estimates(&self) -> Vec<MomentEstimate> {
        let n = self.count as f64;
        (0..self.order())
            .map(|i| MomentEstimate {
                k: i + 1,
                mean: if self.count == 0 { f64::NAN } else { self.mean[i] },
                std_error: if self.count < 2 {
                    f64::INFINITY
                } else {
                    (self.m2[i] / (n - 1.0)).sqrt() / n.sqrt()
                },
                sample_count: self.count,
            })
            .collect()
    }
}

/// Mean and standard error from equal-weight batch means.
pub fn batch_means_estimate(k: usize, batch_means: &[f64], sample_count: u64) -> MomentEstimate {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    MomentEstimate { k, mean, std_error: (var / b).sqrt(), sample_count }
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    1.949_5 / (n as f64).sqrt()
}
