use std::sync::Arc;

use super::clock::Clock;
use super::grid::CorridorGrid;
use super::measure::DiscreteOccupation;
use crate::error::{OccError, Result};

/// Path sampled on `t_0 < ... < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if times.len() != levels.len() || times.is_empty() {
            return Err(OccError::Dimension(format!(
                "{} times for {} levels",
                times.len(),
                levels.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OccError::Config("sample times must increase".into()));
        }
        Ok(Self { times, levels })
    }

    /// Path on the uniform grid `t_n = n * dt`.
    pub fn uniform(dt: f64, levels: Vec<f64>) -> Result<Self> {
        let times = (0..levels.len()).map(|n| n as f64 * dt).collect();
        Self::new(times, levels)
    }

    pub fn n_steps(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn terminal(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }
}

/// Left-endpoint occupation of `path`: level `X_{t_n}` receives the clock
/// increment over `[t_n, t_{n+1})`. The terminal level enters the range only.
pub fn occupation_from_path(
    path: &SampledPath,
    clock: Clock,
    grid: Arc<CorridorGrid>,
    vol_record: Option<&[f64]>,
) -> Result<DiscreteOccupation> {
    let n = path.n_steps();
    if let Some(v) = vol_record {
        if v.len() != n {
            return Err(OccError::Dimension(format!(
                "vol record has {} entries for {n} steps",
                v.len()
            )));
        }
    } else if clock.needs_vol() {
        return Err(OccError::Dimension(
            "quadratic-variation clock needs a vol record".into(),
        ));
    }
    let mut occ = DiscreteOccupation::new(grid);
    for i in 0..n {
        let t = path.times[i];
        let w = clock.increment(t, path.times[i + 1] - t, vol_record.map(|v| v[i]))?;
        occ.accumulate(path.levels[i], w)?;
    }
    occ.observe(path.terminal());
    Ok(occ)
}
