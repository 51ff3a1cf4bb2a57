//! Confidence intervals and goodness-of-fit helpers used by estimators and reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

/// A binomial proportion with a two-sided Clopper–Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, confidence: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(successes, trials, confidence);
        let estimate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Self {
            successes,
            trials,
            estimate,
            ci_low,
            ci_high,
            confidence,
        }
    }

    /// Binomial standard deviation of the estimate at probability `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        binomial_sigma(p, self.trials)
    }
}

pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let a = (1.0 - confidence) / 2.0;
    let x = successes as f64;
    let n = trials as f64;
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0)
            .map(|b| b.inverse_cdf(a))
            .unwrap_or(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .map(|b| b.inverse_cdf(1.0 - a))
            .unwrap_or(1.0)
    };
    (low, high)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    ChiSquared::new(dof.max(1.0))
        .map(|c| c.sf(stat))
        .unwrap_or(0.0)
}

/// Pearson statistic of observed counts against expected probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = counts.len() as f64 - 1.0;
    (stat, chi_square_sf(stat, dof))
}

/// Total variation distance between two distributions given on the same index set.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clopper_pearson_brackets_estimate() {
        let p = Proportion::new(30, 100, 0.99);
        assert!(p.ci_low < 0.3 && 0.3 < p.ci_high);
        // beta quantiles for x=30, n=100 at 99% from an independent implementation
        assert!((p.ci_low - 0.189014761860124).abs() < 1e-6, "{}", p.ci_low);
        assert!(
            (p.ci_high - 0.430613553616521).abs() < 1e-6,
            "{}",
            p.ci_high
        );
        let z = Proportion::new(0, 50, 0.99);
        assert_eq!(z.ci_low, 0.0);
        assert!((z.ci_high - (1.0 - 0.005f64.powf(1.0 / 50.0))).abs() < 1e-6);
    }

    #[test]
    fn chi_square_tail() {
        assert!((chi_square_sf(3.841458820694124, 1.0) - 0.05).abs() < 1e-6);
        let (_, p) = chi_square_uniform(&[100, 100, 100, 100]);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_basic() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
    }
}
