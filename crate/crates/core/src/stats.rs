//! Sample means with Monte Carlo standard errors.

use crate::error::{OccError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Number of samples the estimate averages.
    pub n: usize,
}

/// Mean and standard error of `values`. With `antithetic`, sample `j` is
/// paired with `j + n/2` and pair averages are treated as the i.i.d. draws.
pub fn mean_stderr(values: &[f64], antithetic: bool) -> Result<MeanEstimate> {
    let n = values.len();
    if n == 0 {
        return Err(OccError::EmptyEnsemble);
    }
    if antithetic {
        if !n.is_multiple_of(2) {
            return Err(OccError::Config(format!(
                "antithetic estimate needs an even sample count, got {n}"
            )));
        }
        let h = n / 2;
        let pairs: Vec<f64> = (0..h).map(|j| 0.5 * (values[j] + values[j + h])).collect();
        let est = plain(&pairs);
        return Ok(MeanEstimate { n, ..est });
    }
    Ok(plain(values))
}

fn plain(values: &[f64]) -> MeanEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanEstimate { mean, stderr, n }
}

/// `sqrt(a^2 + b^2)`, the standard error of a difference of independent estimates.
pub fn combined_stderr(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plain_estimate() {
        let e = mean_stderr(&[1.0, 2.0, 3.0, 4.0], false).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_relative_eq!(e.stderr, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn antithetic_pairs_cancel() {
        // perfectly anti-correlated pairs carry no variance
        let e = mean_stderr(&[1.0, 2.0, -1.0, -2.0], true).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.n, 4);
        assert!(mean_stderr(&[1.0, 2.0, 3.0], true).is_err());
        assert!(mean_stderr(&[], false).is_err());
    }
}
