use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::SimConfig;
use super::vol::VolatilityFunctional;
use crate::error::{OccError, Result};
use crate::occupation::{Clock, DiscreteOccupation};
use crate::rng::{antithetic_source, path_rng};

/// A simulated path with its occupation flows.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupiedPath {
    /// `X_{t_0} .. X_{t_N}`.
    pub levels: Vec<f64>,
    /// `sigma_{t_0} .. sigma_{t_{N-1}}`.
    pub vols: Vec<f64>,
    /// Terminal occupation under the driving clock.
    pub occupation: DiscreteOccupation,
    /// Terminal occupations under the recorded clocks, in config order.
    pub recorded: Vec<DiscreteOccupation>,
    /// Driving occupations at the requested snapshot steps.
    pub snapshots: Vec<DiscreteOccupation>,
}

impl OccupiedPath {
    pub fn terminal(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub times: Vec<f64>,
    pub paths: Vec<OccupiedPath>,
    pub clock: Clock,
    pub record_clocks: Vec<Clock>,
    pub antithetic: bool,
    pub rate: f64,
    pub dividend: f64,
    pub x0: f64,
}

impl Ensemble {
    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Occupation of path `j` under `clock`, if that flow was recorded.
    pub fn flow(&self, j: usize, clock: Clock) -> Option<&DiscreteOccupation> {
        let p = &self.paths[j];
        if self.clock.equivalent(&clock) {
            return Some(&p.occupation);
        }
        self.record_clocks
            .iter()
            .position(|c| c.equivalent(&clock))
            .map(|k| &p.recorded[k])
    }

    pub fn has_flow(&self, clock: Clock) -> bool {
        self.clock.equivalent(&clock) || self.record_clocks.iter().any(|c| c.equivalent(&clock))
    }
}

/// Per-path state exposed to step-synchronized variance rules.
pub struct PathState {
    index: usize,
    x: f64,
    occupation: DiscreteOccupation,
    recorded: Vec<DiscreteOccupation>,
    levels: Vec<f64>,
    vols: Vec<f64>,
    snapshots: Vec<DiscreteOccupation>,
    rng: ChaCha8Rng,
    sign: f64,
}

impl PathState {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn spot(&self) -> f64 {
        self.x
    }

    /// Driving occupation accumulated so far.
    pub fn occupation(&self) -> &DiscreteOccupation {
        &self.occupation
    }
}

/// One log-Euler step `x exp(sigma sqrt(dt) z + (carry - var/2) dt)` with `sigma = sqrt(var)`.
#[inline]
pub fn log_euler_step(x: f64, var: f64, dt: f64, z: f64, carry: f64) -> f64 {
    x * (var.sqrt() * dt.sqrt() * z + (carry - 0.5 * var) * dt).exp()
}

/// Runs all paths in lockstep. At each step the driving and recorded flows
/// take the current level (calendar and exponential clocks first), then
/// `variance` returns `sigma^2` for every path from the full ensemble state,
/// then quadratic-variation flows take `sigma^2 dt` and the spot moves.
pub fn simulate_synchronized<F>(cfg: &SimConfig, mut variance: F) -> Result<Ensemble>
where
    F: FnMut(usize, f64, &[PathState]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let dt = cfg.dt();
    let carry = cfg.rate - cfg.dividend;
    let n_steps = cfg.n_steps;
    let mut states: Vec<PathState> = (0..cfg.n_paths)
        .map(|j| {
            let (src, sign) = antithetic_source(j, cfg.n_paths, cfg.antithetic);
            let mut levels = Vec::with_capacity(n_steps + 1);
            levels.push(cfg.x0);
            PathState {
                index: j,
                x: cfg.x0,
                occupation: DiscreteOccupation::starting_at(cfg.grid.clone(), cfg.x0),
                recorded: cfg
                    .record_clocks
                    .iter()
                    .map(|_| DiscreteOccupation::starting_at(cfg.grid.clone(), cfg.x0))
                    .collect(),
                levels,
                vols: Vec::with_capacity(n_steps),
                snapshots: Vec::with_capacity(cfg.snapshot_steps.len()),
                rng: path_rng(cfg.seed, src),
                sign,
            }
        })
        .collect();

    let snap_at = |n: usize| cfg.snapshot_steps.iter().filter(move |k| **k == n).count();

    for n in 0..n_steps {
        let t = n as f64 * dt;
        let snaps = snap_at(n);
        states.par_iter_mut().try_for_each(|s| -> Result<()> {
            for _ in 0..snaps {
                s.snapshots.push(s.occupation.clone());
            }
            if !cfg.clock.needs_vol() {
                let w = cfg.clock.increment(t, dt, None)?;
                s.occupation.accumulate(s.x, w)?;
            }
            for (c, occ) in cfg.record_clocks.iter().zip(s.recorded.iter_mut()) {
                if !c.needs_vol() {
                    occ.accumulate(s.x, c.increment(t, dt, None)?)?;
                }
            }
            Ok(())
        })?;

        let vars = variance(n, t, &states)?;
        if vars.len() != states.len() {
            return Err(OccError::Dimension(format!(
                "variance rule returned {} values for {} paths",
                vars.len(),
                states.len()
            )));
        }

        states
            .par_iter_mut()
            .zip(vars.par_iter())
            .try_for_each(|(s, &var)| -> Result<()> {
                if !(var >= 0.0) || !var.is_finite() {
                    return Err(OccError::Simulation {
                        step: n,
                        path: s.index,
                        detail: format!("variance {var} at spot {}", s.x),
                    });
                }
                let sigma = var.sqrt();
                if cfg.clock.needs_vol() {
                    let w = cfg.clock.increment(t, dt, Some(sigma))?;
                    s.occupation.accumulate(s.x, w)?;
                }
                for (c, occ) in cfg.record_clocks.iter().zip(s.recorded.iter_mut()) {
                    if c.needs_vol() {
                        occ.accumulate(s.x, c.increment(t, dt, Some(sigma))?)?;
                    }
                }
                let z: f64 = s.rng.sample::<f64, _>(StandardNormal) * s.sign;
                let next = log_euler_step(s.x, var, dt, z, carry);
                if !next.is_finite() {
                    return Err(OccError::Simulation {
                        step: n,
                        path: s.index,
                        detail: format!("spot became {next} from {} with variance {var}", s.x),
                    });
                }
                s.vols.push(sigma);
                s.x = next;
                s.levels.push(next);
                Ok(())
            })?;
    }

    let snaps = snap_at(n_steps);
    let paths = states
        .into_par_iter()
        .map(|mut s| {
            for _ in 0..snaps {
                s.snapshots.push(s.occupation.clone());
            }
            s.occupation.observe(s.x);
            for occ in &mut s.recorded {
                occ.observe(s.x);
            }
            OccupiedPath {
                levels: s.levels,
                vols: s.vols,
                occupation: s.occupation,
                recorded: s.recorded,
                snapshots: s.snapshots,
            }
        })
        .collect();

    Ok(Ensemble {
        times: cfg.times(),
        paths,
        clock: cfg.clock,
        record_clocks: cfg.record_clocks.clone(),
        antithetic: cfg.antithetic,
        rate: cfg.rate,
        dividend: cfg.dividend,
        x0: cfg.x0,
    })
}

/// Log-Euler integration of `dX/X = (r - q) dt + sigma(O_t, X_t) dW_t`.
pub fn euler_occupied(cfg: &SimConfig, vol: &dyn VolatilityFunctional) -> Result<Ensemble> {
    simulate_synchronized(cfg, |n, t, states| {
        states
            .par_iter()
            .map(|s| {
                let sigma = vol.vol(s.occupation(), s.spot(), t);
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(OccError::Simulation {
                        step: n,
                        path: s.index(),
                        detail: format!("volatility {sigma} at spot {}", s.spot()),
                    });
                }
                Ok(sigma * sigma)
            })
            .collect()
    })
}

/// Brownian path `x0 + sum sqrt(dt) Z` of path index `path`.
pub fn brownian_path(
    seed: u64,
    path: usize,
    n_paths: usize,
    antithetic: bool,
    n_steps: usize,
    dt: f64,
    x0: f64,
) -> Vec<f64> {
    let (src, sign) = antithetic_source(path, n_paths, antithetic);
    let mut rng = path_rng(seed, src);
    let sq = dt.sqrt();
    let mut x = x0;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(x);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += sq * (sign * z);
        out.push(x);
    }
    out
}

/// Brownian ensemble started at `cfg.x0`, one level vector per path.
pub fn simulate_bm(cfg: &SimConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let dt = cfg.dt();
    Ok((0..cfg.n_paths)
        .into_par_iter()
        .map(|j| brownian_path(cfg.seed, j, cfg.n_paths, cfg.antithetic, cfg.n_steps, dt, cfg.x0))
        .collect())
}
