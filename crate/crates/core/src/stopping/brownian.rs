use rayon::prelude::*;

use super::analytic::continuation_value;
use super::result::StoppingResult;
use crate::error::{OccError, Result};
use crate::occupation::{make_grid, DiscreteOccupation};
use crate::sde::brownian_path;
use crate::stats::mean_stderr;

/// Brownian experiment settings shared by the sample-based stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub horizon: f64,
    pub n_steps: usize,
    /// Corridor half width of the local time estimate.
    pub eps: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            n_steps: 400,
            eps: 0.05,
            n_paths: 1 << 14,
            seed: 0,
            antithetic: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || self.n_steps == 0 || self.n_paths == 0 {
            return Err(OccError::Config(
                "horizon, n_steps and n_paths must be positive".into(),
            ));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(OccError::Config(format!(
                "corridor half width must lie in (0, 1], got {}",
                self.eps
            )));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(OccError::Config("antithetic sampling needs an even path count".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn path(&self, j: usize) -> Vec<f64> {
        brownian_path(self.seed, j, self.n_paths, self.antithetic, self.n_steps, self.dt(), 0.0)
    }

    /// Nearest step to time `t`, with a warning when `t` is off the grid.
    pub fn snap(&self, t: f64) -> usize {
        let raw = t / self.dt();
        let n = raw.round().max(0.0).min(self.n_steps as f64) as usize;
        if (raw - n as f64).abs() > 1e-9 {
            log::warn!("time {t} is not on the grid; using step {n} (t={})", n as f64 * self.dt());
        }
        n
    }
}

/// Corridor local time `(dt / 2 eps) #{1 <= i <= upto : |X_i - x| <= eps}`.
pub fn sample_local_time(levels: &[f64], upto: usize, x: f64, eps: f64, dt: f64) -> f64 {
    let hits = levels[1..=upto].iter().filter(|y| (**y - x).abs() <= eps).count();
    hits as f64 * dt / (2.0 * eps)
}

/// Reward of stopping every path at maturity.
pub fn european_value(cfg: &StudyConfig) -> Result<StoppingResult> {
    cfg.validate()?;
    let (n, dt, eps) = (cfg.n_steps, cfg.dt(), cfg.eps);
    let rewards: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|j| {
            let p = cfg.path(j);
            sample_local_time(&p, n, p[n], eps, dt)
        })
        .collect();
    let est = mean_stderr(&rewards, cfg.antithetic)?;
    Ok(StoppingResult::from_stops(
        est,
        format!("european(eps={eps})"),
        &vec![n; cfg.n_paths],
        n,
        dt,
    ))
}

/// Two exercise dates `{t, T}`: the value is `E[max(L_t^{X_t}, C_t)]` with the
/// closed-form continuation value.
pub fn two_date_value(cfg: &StudyConfig, t: f64) -> Result<StoppingResult> {
    cfg.validate()?;
    if !(t > 0.0 && t < cfg.horizon) {
        return Err(OccError::Domain(format!(
            "exercise date must lie in (0, T), got {t}"
        )));
    }
    let k = cfg.snap(t);
    let (dt, eps, n) = (cfg.dt(), cfg.eps, cfg.n_steps);
    let tk = k as f64 * dt;
    let span = 8.0 * cfg.horizon.sqrt();
    let grid = std::sync::Arc::new(make_grid(0.0, span, 2 * (span / 0.005).round() as usize + 1)?);
    let out: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|j| -> Result<(f64, bool)> {
            let p = cfg.path(j);
            let x = p[k];
            let intrinsic = sample_local_time(&p, k, x, eps, dt);
            let mut occ = DiscreteOccupation::new(grid.clone());
            for y in &p[1..=k] {
                occ.accumulate(*y, dt)?;
            }
            let cont = continuation_value(&occ, x, tk, cfg.horizon, eps)?;
            Ok((intrinsic.max(cont), intrinsic >= cont))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = out.iter().map(|v| v.0).collect();
    let stops: Vec<usize> = out.iter().map(|v| if v.1 { k } else { n }).collect();
    let est = mean_stderr(&values, cfg.antithetic)?;
    Ok(StoppingResult::from_stops(
        est,
        format!("two-date(t={tk})"),
        &stops,
        n,
        dt,
    ))
}

/// When a discrete path counts as having reached the inspected level `x*`,
/// and where the reward is then read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HitRule {
    /// The path enters the local-time corridor `[x* - eps, x* + eps]`; the
    /// reward is the local time at `x*`.
    #[default]
    Corridor,
    /// The path comes within half a scan-grid spacing of `x*`; the reward is
    /// the local time at the current spot.
    GridProximity,
    /// The linearly interpolated path meets `x*` (or comes within half a
    /// spacing); the reward is the local time at `x*`.
    Crossing,
}

/// Space grid for the argmax scan of the inspection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub lo: f64,
    pub hi: f64,
    pub n_intervals: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { lo: -2.0, hi: 2.0, n_intervals: 200 }
    }
}

impl ScanGrid {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n_intervals as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.n_intervals).map(|i| self.lo + i as f64 * h).collect()
    }
}

/// Level of largest corridor local time at step `k`; ties go to the smallest
/// `|x|`, then the smallest `x`.
pub fn argmax_local_time(levels: &[f64], k: usize, eps: f64, points: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = levels[1..=k].to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (0usize, f64::INFINITY);
    for &x in points {
        let lo = sorted.partition_point(|y| *y < x - eps);
        let hi = sorted.partition_point(|y| *y <= x + eps);
        let c = hi - lo;
        let better = c > best.0
            || (c == best.0 && (x.abs() < best.1.abs() || (x.abs() == best.1.abs() && x < best.1)));
        if better {
            best = (c, x);
        }
    }
    best.1
}

/// Stop at the first revisit after `iota` of the level that maximised the
/// local time at `iota`, else at maturity.
pub fn inspection_value(
    cfg: &StudyConfig,
    iota: f64,
    grid: ScanGrid,
    rule: HitRule,
) -> Result<StoppingResult> {
    cfg.validate()?;
    if !(iota > 0.0 && iota < cfg.horizon) {
        return Err(OccError::Domain(format!(
            "inspection date must lie in (0, T), got {iota}"
        )));
    }
    if grid.n_intervals == 0 || !(grid.hi > grid.lo) {
        return Err(OccError::Config("scan grid needs hi > lo and at least one interval".into()));
    }
    let k = cfg.snap(iota);
    let (dt, eps, n) = (cfg.dt(), cfg.eps, cfg.n_steps);
    let points = grid.points();
    let half = 0.5 * grid.spacing();
    let out: Vec<(f64, usize)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|j| {
            let p = cfg.path(j);
            let target = argmax_local_time(&p, k, eps, &points);
            let hit = |i: usize| {
                let d = p[i] - target;
                match rule {
                    HitRule::Corridor => d.abs() <= eps,
                    HitRule::GridProximity => d.abs() <= half,
                    HitRule::Crossing => d.abs() <= half || (i > k && d * (p[i - 1] - target) < 0.0),
                }
            };
            match (k..=n).find(|&i| hit(i)) {
                Some(tau) => {
                    let level = if rule == HitRule::GridProximity { p[tau] } else { target };
                    (sample_local_time(&p, tau, level, eps, dt), tau)
                }
                None => (sample_local_time(&p, n, p[n], eps, dt), n),
            }
        })
        .collect();
    let values: Vec<f64> = out.iter().map(|v| v.0).collect();
    let stops: Vec<usize> = out.iter().map(|v| v.1).collect();
    let est = mean_stderr(&values, cfg.antithetic)?;
    Ok(StoppingResult::from_stops(
        est,
        format!("inspection(iota={})", k as f64 * dt),
        &stops,
        n,
        dt,
    ))
}
