use super::analytic::eps_expansion;
use super::brownian::{european_value, inspection_value, HitRule, ScanGrid, StudyConfig};
use crate::error::{OccError, Result};

/// Stopping rule evaluated along an `eps` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepStrategy {
    European,
    Inspection { iota: f64, grid: ScanGrid, rule: HitRule },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub eps: f64,
    pub value: f64,
    pub stderr: f64,
    /// Second-order expansion of the European value, when it applies.
    pub expansion: Option<f64>,
}

/// Values of `strategy` for each corridor half width. Every point reuses the
/// seed of `base`, so the points share their paths.
pub fn eps_sweep(base: &StudyConfig, strategy: SweepStrategy, eps: &[f64]) -> Result<Vec<SweepPoint>> {
    if eps.is_empty() {
        return Err(OccError::Config("eps sweep needs at least one value".into()));
    }
    eps.iter()
        .map(|&e| {
            let cfg = StudyConfig { eps: e, ..base.clone() };
            let (r, expansion) = match strategy {
                SweepStrategy::European => {
                    (european_value(&cfg)?, Some(eps_expansion(cfg.horizon, e)?))
                }
                SweepStrategy::Inspection { iota, grid, rule } => {
                    (inspection_value(&cfg, iota, grid, rule)?, None)
                }
            };
            Ok(SweepPoint { eps: e, value: r.value, stderr: r.stderr, expansion })
        })
        .collect()
}

/// Whether `points` (in increasing `eps`) never rise by more than `k` combined
/// standard errors between neighbours.
pub fn nonincreasing_within(points: &[SweepPoint], k: f64) -> bool {
    points
        .windows(2)
        .all(|w| w[1].value <= w[0].value + k * w[0].stderr.hypot(w[1].stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn european_sweep_tracks_expansion() {
        let cfg = StudyConfig { n_steps: 400, n_paths: 4096, seed: 3, ..Default::default() };
        let pts = eps_sweep(&cfg, SweepStrategy::European, &[0.1, 0.2]).unwrap();
        for p in &pts {
            let a = p.expansion.unwrap();
            assert!((p.value - a).abs() < 4.0 * p.stderr + 0.01, "{p:?}");
        }
        assert!(nonincreasing_within(&pts, 3.0));
        assert!(eps_sweep(&cfg, SweepStrategy::European, &[]).is_err());
    }

    #[test]
    fn monotonicity_check() {
        let p = |eps, value| SweepPoint { eps, value, stderr: 0.01, expansion: None };
        assert!(nonincreasing_within(&[p(0.1, 1.0), p(0.2, 1.02)], 3.0));
        assert!(!nonincreasing_within(&[p(0.1, 1.0), p(0.2, 1.1)], 3.0));
    }
}
