use std::sync::Arc;

use crate::error::{OccError, Result};
use crate::occupation::{Clock, CorridorGrid};

/// Simulation settings shared by every path generator.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub rate: f64,
    pub dividend: f64,
    pub x0: f64,
    /// Clock of the occupation flow the volatility reads.
    pub clock: Clock,
    pub grid: Arc<CorridorGrid>,
    /// Additional flows recorded alongside the driving one, e.g. calendar
    /// and quadratic-variation flows for payoffs.
    pub record_clocks: Vec<Clock>,
    /// Steps `k` at which the driving occupation of `[0, t_k)` is kept.
    pub snapshot_steps: Vec<usize>,
}

impl SimConfig {
    pub fn new(horizon: f64, n_steps: usize, n_paths: usize, grid: Arc<CorridorGrid>) -> Self {
        Self {
            horizon,
            n_steps,
            n_paths,
            seed: 0,
            antithetic: false,
            rate: 0.0,
            dividend: 0.0,
            x0: 0.0,
            clock: Clock::Calendar,
            grid,
            record_clocks: Vec::new(),
            snapshot_steps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(OccError::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.n_steps == 0 {
            return Err(OccError::Config("n_steps must be at least 1".into()));
        }
        if self.n_paths == 0 {
            return Err(OccError::Config("n_paths must be at least 1".into()));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(OccError::Config(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        if !self.x0.is_finite() || !self.rate.is_finite() || !self.dividend.is_finite() {
            return Err(OccError::Config("x0, rate and dividend must be finite".into()));
        }
        if let Some(k) = self.snapshot_steps.iter().find(|k| **k > self.n_steps) {
            return Err(OccError::Config(format!(
                "snapshot step {k} beyond {} steps",
                self.n_steps
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps).map(|n| n as f64 * dt).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::make_grid;

    fn cfg() -> SimConfig {
        SimConfig::new(1.0, 4, 6, Arc::new(make_grid(0.0, 1.0, 3).unwrap()))
    }

    #[test]
    fn time_grid() {
        assert_eq!(cfg().times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.horizon = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.n_paths = 5;
        c.antithetic = true;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.n_steps = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.snapshot_steps = vec![5];
        assert!(c.validate().is_err());
    }
}
