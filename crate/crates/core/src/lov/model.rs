use rayon::prelude::*;

use super::projection::{bandwidth, particle_projection};
use super::sensitivity::Sensitivity;
use crate::error::{OccError, Result};
use crate::occupation::{Clock, DiscreteOccupation};
use crate::sde::{simulate_synchronized, Ensemble, LocalVolTable, SimConfig};

/// Normalisation `gamma_t` of the occupation spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaScale {
    /// Reciprocal of the accumulated mass, so `gamma * O(R) = 1` exactly.
    #[default]
    Mass,
    /// `kappa / (exp(kappa t) - 1)`, or `1 / t` for `kappa = 0`.
    ClosedForm,
}

impl GammaScale {
    /// `gamma_t`, or `None` at `t = 0` / with no mass, where the correction vanishes.
    pub fn value(&self, kappa: f64, t: f64, total_mass: f64) -> Option<f64> {
        match self {
            GammaScale::Mass => (total_mass > 0.0).then(|| 1.0 / total_mass),
            GammaScale::ClosedForm => {
                if t <= 0.0 {
                    None
                } else if kappa == 0.0 {
                    Some(1.0 / t)
                } else {
                    Some(kappa / (kappa * t).exp_m1())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LovConfig {
    pub sigma_loc: LocalVolTable,
    pub sensitivity: Sensitivity,
    /// `sigma_loc^2 (1 + gamma <l, O - O_hat>)` instead of `sigma_loc^2 + gamma <l, O - O_hat>`.
    pub multiplicative: bool,
    /// Rate of the exponential clock of the occupation flow.
    pub kappa: f64,
    pub kappa_b: f64,
    pub bandwidth_exponent: f64,
    pub bandwidth_floor: f64,
    /// Variances below this are floored and counted.
    pub var_floor: f64,
    pub gamma: GammaScale,
}

impl LovConfig {
    pub fn new(sigma_loc: LocalVolTable, sensitivity: Sensitivity) -> Self {
        Self {
            sigma_loc,
            sensitivity,
            multiplicative: false,
            kappa: 0.0,
            kappa_b: 1.5,
            bandwidth_exponent: 0.2,
            bandwidth_floor: 1e-8,
            var_floor: 1e-8,
            gamma: GammaScale::Mass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sensitivity.validate()?;
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(OccError::Config(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.kappa_b > 0.0) || !(self.bandwidth_floor > 0.0) || !self.bandwidth_exponent.is_finite() {
            return Err(OccError::Config("bandwidth parameters must be positive".into()));
        }
        if !(self.var_floor > 0.0) {
            return Err(OccError::Config(format!("variance floor must be > 0, got {}", self.var_floor)));
        }
        Ok(())
    }

    pub fn clock(&self) -> Result<Clock> {
        Clock::exponential(self.kappa)
    }
}

/// Occupied variance at one path and step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LovVariance {
    /// Variance used by the step, after flooring.
    pub variance: f64,
    /// `sigma^2 - sigma_loc^2` before flooring.
    pub correction: f64,
    pub floored: bool,
}

/// Local variance plus the sensitivity-weighted spread between the path's
/// occupation and its projection `occ_hat` (bin masses on the same grid).
pub fn lov_variance(
    occ: &DiscreteOccupation,
    occ_hat: &[f64],
    x: f64,
    t: f64,
    cfg: &LovConfig,
) -> Result<LovVariance> {
    if occ_hat.len() != occ.masses().len() {
        return Err(OccError::Dimension(format!(
            "projected occupation has {} bins, occupation has {}",
            occ_hat.len(),
            occ.masses().len()
        )));
    }
    let s = cfg.sigma_loc.at(t, x);
    let local = s * s;
    let gamma = if cfg.sensitivity.is_zero() {
        None
    } else {
        cfg.gamma.value(cfg.kappa, t, occ.total_mass())
    };
    let correction = match gamma {
        None => 0.0,
        Some(g) => {
            let spread: f64 = occ
                .grid()
                .nodes()
                .iter()
                .zip(occ.masses().iter().zip(occ_hat))
                .map(|(&xm, (o, oh))| cfg.sensitivity.eval(t, x, xm) * (o - oh))
                .sum();
            let c = g * spread;
            if cfg.multiplicative {
                local * c
            } else {
                c
            }
        }
    };
    let raw = local + correction;
    let floored = !(raw >= cfg.var_floor);
    Ok(LovVariance {
        variance: if floored { cfg.var_floor } else { raw },
        correction,
        floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub pass: bool,
    /// Largest `|l| / (sigma_loc^2 / 2)` (additive) or `|l| / (1/2)` (multiplicative).
    pub worst_ratio: f64,
    /// `(t, spot, level)` of the largest ratio.
    pub worst_at: Option<(f64, f64, f64)>,
}

/// Checks `|l(t, x', x)| < sigma_loc^2(t, x') / 2` (or `|l| < 1/2` for the
/// multiplicative form) over `times x levels x levels`.
pub fn check_positivity(cfg: &LovConfig, levels: &[f64], times: &[f64]) -> PositivityReport {
    let mut worst = (0.0f64, None);
    for &t in times {
        for &spot in levels {
            let bound = if cfg.multiplicative {
                0.5
            } else {
                let s = cfg.sigma_loc.at(t, spot);
                0.5 * s * s
            };
            for &x in levels {
                let r = cfg.sensitivity.eval(t, spot, x).abs() / bound;
                if r > worst.0 || worst.1.is_none() && !r.is_finite() {
                    worst = (r, Some((t, spot, x)));
                }
            }
        }
    }
    PositivityReport { pass: worst.0 < 1.0, worst_ratio: worst.0, worst_at: worst.1 }
}

#[derive(Debug, Clone)]
pub struct LovRun {
    pub ensemble: Ensemble,
    pub positivity: PositivityReport,
    /// Number of `(step, path)` variances that hit the floor.
    pub floor_events: usize,
    /// `sigma^2 - sigma_loc^2` before flooring, indexed `[step][path]`.
    pub corrections: Vec<Vec<f64>>,
    /// Kernel bandwidth used at each step.
    pub bandwidths: Vec<f64>,
}

/// Simulates the local occupied volatility model with the particle method.
/// At each step every path adds its spot to its occupation, the ensemble
/// projects the occupations on the spots, and each path steps with the
/// resulting variance. The driving clock of `cfg` is replaced by the
/// exponential clock of `lov`.
pub fn simulate_lov(cfg: &SimConfig, lov: &LovConfig) -> Result<LovRun> {
    lov.validate()?;
    if cfg.n_paths < 2 {
        return Err(OccError::Config(format!(
            "the particle method needs at least 2 paths, got {}",
            cfg.n_paths
        )));
    }
    let sim = SimConfig { clock: lov.clock()?, ..cfg.clone() };
    let positivity = check_positivity(lov, sim.grid.nodes(), &sim.times()[..sim.n_steps]);
    let mut floor_events = 0usize;
    let mut corrections = Vec::with_capacity(sim.n_steps);
    let mut bandwidths = Vec::with_capacity(sim.n_steps);

    let ensemble = simulate_synchronized(&sim, |_n, t, states| {
        let spots: Vec<f64> = states.iter().map(|s| s.spot()).collect();
        let h = bandwidth(&spots, lov.kappa_b, lov.bandwidth_exponent, lov.bandwidth_floor);
        bandwidths.push(h);
        let projected = if lov.sensitivity.is_zero() || t == 0.0 {
            None
        } else {
            let masses: Vec<&[f64]> = states.iter().map(|s| s.occupation().masses()).collect();
            Some(particle_projection(&spots, &masses, h)?)
        };
        let evals: Vec<LovVariance> = states
            .par_iter()
            .enumerate()
            .map(|(j, s)| match &projected {
                Some(p) => lov_variance(s.occupation(), &p[j], s.spot(), t, lov),
                None => {
                    let v = lov.sigma_loc.at(t, s.spot());
                    Ok(LovVariance { variance: v * v, correction: 0.0, floored: false })
                }
            })
            .collect::<Result<_>>()?;
        floor_events += evals.iter().filter(|e| e.floored).count();
        corrections.push(evals.iter().map(|e| e.correction).collect());
        Ok(evals.iter().map(|e| e.variance).collect())
    })?;
    if floor_events > 0 {
        log::warn!("{floor_events} occupied variances were floored at {}", lov.var_floor);
    }
    Ok(LovRun { ensemble, positivity, floor_events, corrections, bandwidths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::make_grid;
    use crate::sde::euler_occupied;
    use std::sync::Arc;

    fn skew_table() -> LocalVolTable {
        let levels: Vec<f64> = (0..13).map(|i| 40.0 + 10.0 * i as f64).collect();
        let times = vec![0.0, 0.25, 0.5];
        let mut vols = Vec::new();
        for t in &times {
            for x in &levels {
                vols.push(0.15 + 0.1 * (100.0 / x - 1.0).max(-0.5) + 0.02 * t);
            }
        }
        LocalVolTable::new(times, levels, vols).unwrap()
    }

    fn sim(n_paths: usize) -> SimConfig {
        let mut c = SimConfig::new(0.5, 40, n_paths, Arc::new(make_grid(100.0, 60.0, 41).unwrap()));
        c.x0 = 100.0;
        c.seed = 11;
        c
    }

    #[test]
    fn gamma_scales() {
        assert_eq!(GammaScale::Mass.value(12.0, 0.3, 4.0), Some(0.25));
        assert_eq!(GammaScale::Mass.value(12.0, 0.3, 0.0), None);
        assert_eq!(GammaScale::ClosedForm.value(0.0, 0.5, 0.0), Some(2.0));
        assert_eq!(GammaScale::ClosedForm.value(1.0, 0.0, 1.0), None);
        let g = GammaScale::ClosedForm.value(12.0, 0.5, 0.0).unwrap();
        assert!((g * ((6.0f64).exp() - 1.0) / 12.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn variance_formula() {
        let grid = Arc::new(make_grid(100.0, 20.0, 3).unwrap());
        let mut occ = DiscreteOccupation::new(grid);
        occ.accumulate(100.0, 0.5).unwrap();
        occ.accumulate(85.0, 0.5).unwrap();
        let table = LocalVolTable::constant(0.2).unwrap();
        let mut cfg = LovConfig::new(table, Sensitivity::OneFactor { beta: 0.4, lo: 95.0, hi: 105.0 });
        cfg.multiplicative = true;
        // fraction of time in A is 0.5 against 0.25 expected
        let hat = [0.25, 0.25, 0.5];
        let v = lov_variance(&occ, &hat, 100.0, 0.3, &cfg).unwrap();
        assert!((v.variance - 0.04 * 1.1).abs() < 1e-15);
        let same = lov_variance(&occ, occ.masses(), 100.0, 0.3, &cfg).unwrap();
        assert_eq!(same.variance, 0.2 * 0.2);
        cfg.sensitivity = Sensitivity::Zero;
        assert_eq!(lov_variance(&occ, &hat, 100.0, 0.3, &cfg).unwrap().variance, 0.2 * 0.2);
        assert!(lov_variance(&occ, &[0.0], 100.0, 0.3, &cfg).is_err());
        // additive: 0.04 + 1 * (-1.0) is floored
        cfg.multiplicative = false;
        cfg.sensitivity = Sensitivity::OneFactor { beta: -4.0, lo: 95.0, hi: 105.0 };
        let f = lov_variance(&occ, &hat, 100.0, 0.3, &cfg).unwrap();
        assert!(f.floored && f.variance == cfg.var_floor && (f.correction + 1.0).abs() < 1e-15);
    }

    #[test]
    fn positivity_guard() {
        let table = skew_table();
        let levels: Vec<f64> = (0..50).map(|i| 50.0 + 3.0 * i as f64).collect();
        let times = [0.0, 0.25];
        assert!(check_positivity(&LovConfig::new(table.clone(), Sensitivity::Zero), &levels, &times).pass);
        let tanh = Sensitivity::tanh_for(&table, 5.0).unwrap();
        let r = check_positivity(&LovConfig::new(table.clone(), tanh), &levels, &times);
        assert!(r.pass && r.worst_ratio <= 0.5 + 1e-12, "{r:?}");
        let mut one = LovConfig::new(table, Sensitivity::OneFactor { beta: 0.6, lo: 90.0, hi: 110.0 });
        one.multiplicative = true;
        let r = check_positivity(&one, &levels, &times);
        assert!(!r.pass && (r.worst_ratio - 1.2).abs() < 1e-12);
        assert!(r.worst_at.is_some());
    }

    #[test]
    fn zero_sensitivity_is_local_vol() {
        let table = skew_table();
        let mut cfg = sim(64);
        cfg.rate = 0.01;
        let lov = LovConfig { kappa: 12.0, ..LovConfig::new(table.clone(), Sensitivity::Zero) };
        let run = simulate_lov(&cfg, &lov).unwrap();
        let plain = euler_occupied(&cfg, &table).unwrap();
        for (a, b) in run.ensemble.paths.iter().zip(&plain.paths) {
            assert_eq!(a.levels, b.levels);
            assert_eq!(a.vols, b.vols);
        }
        assert_eq!(run.floor_events, 0);
        assert!(simulate_lov(&sim(1), &lov).is_err());
    }

    #[test]
    fn tanh_run_is_deterministic_and_unfloored() {
        let table = skew_table();
        let lov = LovConfig {
            kappa: 12.0,
            ..LovConfig::new(table.clone(), Sensitivity::tanh_for(&table, 5.0).unwrap())
        };
        let a = simulate_lov(&sim(256), &lov).unwrap();
        let b = simulate_lov(&sim(256), &lov).unwrap();
        assert!(a.positivity.pass);
        assert_eq!(a.floor_events, 0);
        assert_eq!(a.corrections, b.corrections);
        assert!(a.corrections[0].iter().all(|c| *c == 0.0));
        assert!(a.corrections[20].iter().any(|c| *c != 0.0));
        assert!(a.bandwidths.iter().all(|h| *h > 0.0));
        // corrections average out over the ensemble
        let last = &a.corrections[39];
        let mean = last.iter().sum::<f64>() / last.len() as f64;
        let sd = (last.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / last.len() as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (last.len() as f64).sqrt(), "{mean} {sd}");
    }
}
