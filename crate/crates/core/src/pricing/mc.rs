use rayon::prelude::*;

use super::payoff::{evaluate_payoff, timer_step, PayoffSpec};
use crate::error::{OccError, Result};
use crate::occupation::Clock;
use crate::sde::Ensemble;
use crate::stats::{mean_stderr, MeanEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    /// Discount factor applied to the mean payoff (`1` when discounting is per path).
    pub discount: f64,
}

/// Discounted Monte Carlo price. Antithetic ensembles are averaged pairwise
/// before the standard error is computed.
pub fn mc_price(spec: &PayoffSpec, ens: &Ensemble) -> Result<PriceEstimate> {
    spec.validate()?;
    if ens.is_empty() {
        return Err(OccError::EmptyEnsemble);
    }
    if let PayoffSpec::TimerCall { budget, strike } = *spec {
        return timer_price_mc(budget, strike, ens).map(|t| t.price);
    }
    let values: Vec<f64> = (0..ens.len())
        .into_par_iter()
        .map(|j| evaluate_payoff(spec, ens, j))
        .collect::<Result<_>>()?;
    let est = mean_stderr(&values, ens.antithetic)?;
    let df = (-ens.rate * ens.horizon()).exp();
    Ok(PriceEstimate { value: df * est.mean, stderr: df * est.stderr, n_paths: est.n, discount: df })
}

/// Fair corridor variance `K^2 = E[O_T([lo, hi])] / T` from the quadratic-variation flow.
pub fn corridor_var_strike_mc(lo: f64, hi: f64, ens: &Ensemble) -> Result<MeanEstimate> {
    if ens.is_empty() {
        return Err(OccError::EmptyEnsemble);
    }
    if !ens.has_flow(Clock::QuadraticVariation) {
        return Err(OccError::Config(
            "corridor variance needs the quadratic-variation occupation flow".into(),
        ));
    }
    let spec = PayoffSpec::CorridorVarFloatingLeg { lo, hi };
    spec.validate()?;
    let values: Vec<f64> = (0..ens.len())
        .into_par_iter()
        .map(|j| evaluate_payoff(&spec, ens, j))
        .collect::<Result<_>>()?;
    mean_stderr(&values, ens.antithetic)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimerEstimate {
    pub price: PriceEstimate,
    /// Paths whose realised variance never reached the budget; they pay at the horizon.
    pub unreached: usize,
    /// Average exercise time.
    pub mean_expiry: f64,
}

/// Timer call paid at the first step where realised variance reaches
/// `budget`, discounted from that step.
pub fn timer_price_mc(budget: f64, strike: f64, ens: &Ensemble) -> Result<TimerEstimate> {
    PayoffSpec::TimerCall { budget, strike }.validate()?;
    if ens.is_empty() {
        return Err(OccError::EmptyEnsemble);
    }
    let dt = ens.dt();
    let out: Vec<(f64, Option<usize>)> = ens
        .paths
        .par_iter()
        .map(|p| {
            let hit = timer_step(&p.vols, dt, budget);
            let n = hit.unwrap_or(p.levels.len() - 1);
            let df = (-ens.rate * ens.times[n]).exp();
            (df * (p.levels[n] - strike).max(0.0), hit)
        })
        .collect();
    let values: Vec<f64> = out.iter().map(|v| v.0).collect();
    let unreached = out.iter().filter(|v| v.1.is_none()).count();
    if unreached > 0 {
        log::warn!("{unreached} paths never reached the variance budget {budget}");
    }
    let mean_expiry = out
        .iter()
        .map(|v| ens.times[v.1.unwrap_or(ens.times.len() - 1)])
        .sum::<f64>()
        / out.len() as f64;
    let est = mean_stderr(&values, ens.antithetic)?;
    Ok(TimerEstimate {
        price: PriceEstimate { value: est.mean, stderr: est.stderr, n_paths: est.n, discount: 1.0 },
        unreached,
        mean_expiry,
    })
}
