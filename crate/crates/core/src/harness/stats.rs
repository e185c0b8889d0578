use serde::Serialize;

/// Width of every stochastic acceptance band, in standard errors.
pub const SIGMAS: f64 = 3.0;

/// Exact running sums of non-negative integer observations.
///
/// Sums are integers, so merging partial accumulators in any order gives
/// bit-identical summaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExactAccumulator {
    count: u64,
    sum: u128,
    sum_sq: u128,
}

impl ExactAccumulator {
    pub fn push(&mut self, x: u64) {
        let x = u128::from(x);
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, other: Self) -> Self {
        ExactAccumulator {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> u128 {
        self.sum
    }

    pub fn summary(&self) -> StatSummary {
        let n = self.count;
        if n == 0 {
            return StatSummary::default();
        }
        let mean = self.sum as f64 / n as f64;
        let variance = if n < 2 {
            0.0
        } else {
            let n128 = u128::from(n);
            // n Σx² - (Σx)² is exact and non-negative when it fits.
            let spread = n128
                .checked_mul(self.sum_sq)
                .zip(self.sum.checked_mul(self.sum))
                .map(|(a, b)| (a - b) as f64);
            match spread {
                Some(s) => s / (n as f64 * (n - 1) as f64),
                None => {
                    let m2 = self.sum_sq as f64 / n as f64 - mean * mean;
                    (m2 * n as f64 / (n - 1) as f64).max(0.0)
                }
            }
        };
        let stddev = variance.sqrt();
        let stderr = stddev / (n as f64).sqrt();
        StatSummary {
            trials: n,
            mean,
            stddev,
            stderr,
            lower_3sigma: mean - SIGMAS * stderr,
            upper_3sigma: mean + SIGMAS * stderr,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StatSummary {
    pub trials: u64,
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub lower_3sigma: f64,
    pub upper_3sigma: f64,
}

/// Floating slack added to every comparison so zero-variance cases survive
/// last-bit rounding of the expected value.
fn rounding_slack(expected: f64) -> f64 {
    1e-9 * expected.abs().max(1.0)
}

/// `|observed - expected| <= 3 stderr`.
pub fn within_sigmas(observed: f64, expected: f64, stderr: f64) -> bool {
    (observed - expected).abs() <= SIGMAS * stderr + rounding_slack(expected)
}

/// `observed >= bound - 3 stderr`.
pub fn at_least_within_sigmas(observed: f64, bound: f64, stderr: f64) -> bool {
    observed >= bound - SIGMAS * stderr - rounding_slack(bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_matches_textbook_formulas() {
        let mut acc = ExactAccumulator::default();
        for x in [2, 4, 4, 4, 5, 5, 7, 9] {
            acc.push(x);
        }
        let s = acc.summary();
        assert_eq!(s.trials, 8);
        assert_eq!(s.mean, 5.0);
        assert!((s.stddev - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((s.stderr - s.stddev / 8f64.sqrt()).abs() < 1e-15);
        assert!((s.upper_3sigma - s.lower_3sigma - 6.0 * s.stderr).abs() < 1e-12);
    }

    #[test]
    fn merge_order_does_not_matter() {
        let chunks: Vec<Vec<u64>> = vec![vec![1, 2, 3], vec![10], vec![7, 7]];
        let fold = |order: &[usize]| {
            order.iter().fold(ExactAccumulator::default(), |acc, &i| {
                let mut part = ExactAccumulator::default();
                chunks[i].iter().for_each(|&x| part.push(x));
                acc.merge(part)
            })
        };
        assert_eq!(fold(&[0, 1, 2]).summary(), fold(&[2, 0, 1]).summary());
    }

    #[test]
    fn degenerate_samples() {
        assert_eq!(ExactAccumulator::default().summary(), StatSummary::default());
        let mut one = ExactAccumulator::default();
        one.push(5);
        assert_eq!((one.summary().mean, one.summary().stderr), (5.0, 0.0));
        assert!(within_sigmas(7.0, 7.000_000_000_01, 0.0));
        assert!(!within_sigmas(7.0, 7.1, 0.0));
        assert!(at_least_within_sigmas(1.0, 1.2, 0.1));
        assert!(!at_least_within_sigmas(1.0, 1.4, 0.1));
    }
}
