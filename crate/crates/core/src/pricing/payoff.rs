use serde::{Deserialize, Serialize};

use crate::error::{OccError, Result};
use crate::occupation::Clock;
use crate::sde::Ensemble;

/// Contract whose payoff is read from a path's occupation flows and terminal level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffSpec {
    /// `(X_T - time average of X)^+`.
    AsianFloatingCall,
    /// `X_T - min X`.
    LookbackFloatingCall,
    /// `coupon * (time spent in [lo, hi]) / T`.
    RangeAccrual { lo: f64, hi: f64, coupon: f64 },
    /// `X_T` unless the time spent above `barrier` reaches `window`.
    ParisianUpOutAssetOrNothing { barrier: f64, window: f64 },
    /// Realised variance accrued inside `[lo, hi]`, divided by `T`.
    CorridorVarFloatingLeg { lo: f64, hi: f64 },
    /// `(X_tau - strike)^+` at the first step where the realised variance reaches `budget`.
    TimerCall { budget: f64, strike: f64 },
    VanillaCall { strike: f64 },
    VanillaPut { strike: f64 },
}

impl PayoffSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PayoffSpec::AsianFloatingCall => "asian_floating_call",
            PayoffSpec::LookbackFloatingCall => "lookback_floating_call",
            PayoffSpec::RangeAccrual { .. } => "range_accrual",
            PayoffSpec::ParisianUpOutAssetOrNothing { .. } => "parisian_up_out_asset_or_nothing",
            PayoffSpec::CorridorVarFloatingLeg { .. } => "corridor_var_floating_leg",
            PayoffSpec::TimerCall { .. } => "timer_call",
            PayoffSpec::VanillaCall { .. } => "vanilla_call",
            PayoffSpec::VanillaPut { .. } => "vanilla_put",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PayoffSpec::RangeAccrual { lo, hi, coupon } => lo <= hi && coupon.is_finite(),
            PayoffSpec::CorridorVarFloatingLeg { lo, hi } => lo <= hi,
            PayoffSpec::ParisianUpOutAssetOrNothing { barrier, window } => {
                barrier.is_finite() && window > 0.0
            }
            PayoffSpec::TimerCall { budget, strike } => budget > 0.0 && strike >= 0.0,
            PayoffSpec::VanillaCall { strike } | PayoffSpec::VanillaPut { strike } => strike > 0.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(OccError::Config(format!("invalid payoff parameters {self:?}")))
        }
    }

    /// Occupation flow the payoff reads, if any.
    pub fn required_clock(&self) -> Option<Clock> {
        match self {
            PayoffSpec::AsianFloatingCall
            | PayoffSpec::LookbackFloatingCall
            | PayoffSpec::RangeAccrual { .. }
            | PayoffSpec::ParisianUpOutAssetOrNothing { .. } => Some(Clock::Calendar),
            PayoffSpec::CorridorVarFloatingLeg { .. } => Some(Clock::QuadraticVariation),
            _ => None,
        }
    }
}

/// First step index `n` (the level `X_{t_n}`) at which `sum sigma_i^2 dt`
/// reaches `budget`, or `None` if it never does.
pub fn timer_step(vols: &[f64], dt: f64, budget: f64) -> Option<usize> {
    let target = budget * (1.0 - 1e-12);
    let mut q = 0.0;
    for (i, s) in vols.iter().enumerate() {
        q += s * s * dt;
        if q >= target {
            return Some(i + 1);
        }
    }
    None
}

/// Undiscounted payoff of path `j`.
pub fn evaluate_payoff(spec: &PayoffSpec, ens: &Ensemble, j: usize) -> Result<f64> {
    let path = ens.paths.get(j).ok_or(OccError::EmptyEnsemble)?;
    let flow = match spec.required_clock() {
        Some(c) => Some(ens.flow(j, c).ok_or_else(|| {
            OccError::Config(format!("{} needs the {c:?} occupation flow", spec.name()))
        })?),
        None => None,
    };
    let horizon = ens.horizon();
    let xt = path.terminal();
    Ok(match *spec {
        PayoffSpec::AsianFloatingCall => {
            let avg = flow.unwrap().first_moment() / horizon;
            (xt - avg).max(0.0)
        }
        PayoffSpec::LookbackFloatingCall => xt - flow.unwrap().support_bounds()?.0,
        PayoffSpec::RangeAccrual { lo, hi, coupon } => coupon * flow.unwrap().mass_in(lo, hi) / horizon,
        PayoffSpec::ParisianUpOutAssetOrNothing { barrier, window } => {
            if flow.unwrap().mass_in(barrier, f64::INFINITY) < window {
                xt
            } else {
                0.0
            }
        }
        PayoffSpec::CorridorVarFloatingLeg { lo, hi } => flow.unwrap().mass_in(lo, hi) / horizon,
        PayoffSpec::TimerCall { budget, strike } => {
            let n = timer_step(&path.vols, ens.dt(), budget).unwrap_or(path.levels.len() - 1);
            (path.levels[n] - strike).max(0.0)
        }
        PayoffSpec::VanillaCall { strike } => (xt - strike).max(0.0),
        PayoffSpec::VanillaPut { strike } => (strike - xt).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::make_grid;
    use crate::sde::{euler_occupied, ConstantVol, SimConfig};
    use std::sync::Arc;

    fn deterministic(sigma: f64, rate: f64) -> Ensemble {
        let mut c = SimConfig::new(1.0, 64, 2, Arc::new(make_grid(100.0, 50.0, 51).unwrap()));
        c.x0 = 100.0;
        c.rate = rate;
        c.record_clocks = vec![Clock::QuadraticVariation];
        euler_occupied(&c, &ConstantVol(sigma)).unwrap()
    }

    #[test]
    fn flat_and_rising_paths() {
        let flat = deterministic(0.0, 0.0);
        assert_eq!(evaluate_payoff(&PayoffSpec::AsianFloatingCall, &flat, 0).unwrap(), 0.0);
        let rising = deterministic(0.0, 0.1);
        let p = &rising.paths[0];
        let look = evaluate_payoff(&PayoffSpec::LookbackFloatingCall, &rising, 0).unwrap();
        assert_eq!(look, p.terminal() - 100.0);
        let direct = p.levels[..64].iter().sum::<f64>() / 64.0;
        let asian = evaluate_payoff(&PayoffSpec::AsianFloatingCall, &rising, 0).unwrap();
        assert!((asian - (p.terminal() - direct)).abs() <= 1e-12 * asian);
    }

    #[test]
    fn parisian_indicator() {
        let rising = deterministic(0.0, 0.1);
        let xt = rising.paths[0].terminal();
        let above = |b| PayoffSpec::ParisianUpOutAssetOrNothing { barrier: b, window: 0.25 };
        assert_eq!(evaluate_payoff(&above(1000.0), &rising, 0).unwrap(), xt);
        assert_eq!(evaluate_payoff(&above(50.0), &rising, 0).unwrap(), 0.0);
    }

    #[test]
    fn timer_steps() {
        assert_eq!(timer_step(&[0.2; 100], 0.01, 0.0008), Some(2));
        assert_eq!(timer_step(&[0.2; 10], 0.01, 1.0), None);
        assert_eq!(timer_step(&[0.1, 0.3], 1.0, 0.05), Some(2));
    }

    #[test]
    fn missing_flow_is_a_config_error() {
        let mut c = SimConfig::new(1.0, 8, 2, Arc::new(make_grid(100.0, 50.0, 51).unwrap()));
        c.x0 = 100.0;
        let e = euler_occupied(&c, &ConstantVol(0.2)).unwrap();
        let err = evaluate_payoff(&PayoffSpec::CorridorVarFloatingLeg { lo: 0.0, hi: 1e9 }, &e, 0).unwrap_err();
        assert!(err.is_config());
        assert!(PayoffSpec::RangeAccrual { lo: 2.0, hi: 1.0, coupon: 1.0 }.validate().is_err());
    }
}
