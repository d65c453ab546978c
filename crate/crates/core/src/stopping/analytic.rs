use std::f64::consts::PI;

use crate::error::{OccError, Result};
use crate::occupation::{DiscreteOccupation, OccupationIntegrand};

/// `E[L_T^{X_T}] = sqrt(2T / pi)` for Brownian motion.
pub fn analytic_euro_value(horizon: f64) -> Result<f64> {
    if !(horizon >= 0.0) {
        return Err(OccError::Domain(format!("horizon must be >= 0, got {horizon}")));
    }
    Ok((2.0 * horizon / PI).sqrt())
}

/// Second-order expansion of the corridor reward at maturity:
/// `sqrt(2T/pi) - eps/2 + eps^2 / sqrt(18 pi T)`.
pub fn eps_expansion(horizon: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(OccError::Domain(format!("corridor half width must be > 0, got {eps}")));
    }
    if !(horizon > 0.0) {
        return Err(OccError::Domain(format!("horizon must be > 0, got {horizon}")));
    }
    Ok(analytic_euro_value(horizon)? - 0.5 * eps + eps * eps / (18.0 * PI * horizon).sqrt())
}

/// Density of `N(0, var)` at `x`.
pub fn heat_kernel(var: f64, x: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

/// `E[L_T^{X_T} | F_t] = sum_m phi_{T-t}(x - x_m) O_m + sqrt(2(T-t)/pi)`.
///
/// From `t >= T` on there is nothing left to wait for and the spot local
/// time with corridor `eps` is returned; a warning is logged.
pub fn continuation_value(
    occ: &DiscreteOccupation,
    x: f64,
    t: f64,
    horizon: f64,
    eps: f64,
) -> Result<f64> {
    let tau = horizon - t;
    if tau <= 0.0 {
        log::warn!("continuation value requested at t={t} >= T={horizon}; using the spot local time");
        return occ.spot_local_time(x, eps);
    }
    let kernel = |y: f64| heat_kernel(tau, x - y);
    Ok(occ.integral(OccupationIntegrand::Function(&kernel)) + analytic_euro_value(tau)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::make_grid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn closed_forms() {
        assert_relative_eq!(analytic_euro_value(1.0).unwrap(), 0.797_884_560_802_865_4, epsilon = 1e-15);
        assert_eq!(analytic_euro_value(0.0).unwrap(), 0.0);
        assert_relative_eq!(analytic_euro_value(4.0).unwrap(), 1.595_769_121_605_731, epsilon = 1e-14);
        assert!(analytic_euro_value(-1.0).is_err());
        assert!((eps_expansion(1.0, 0.05).unwrap() - 0.77321).abs() < 1e-5);
        assert!((eps_expansion(1.0, 0.2).unwrap() - 0.70320).abs() < 1e-5);
        assert!((eps_expansion(1.0, 1e-9).unwrap() - analytic_euro_value(1.0).unwrap()).abs() < 1e-9);
        assert!(eps_expansion(1.0, 0.0).is_err());
    }

    #[test]
    fn continuation_examples() {
        let g = Arc::new(make_grid(0.0, 4.0, 401).unwrap());
        let empty = DiscreteOccupation::new(g.clone());
        assert_relative_eq!(
            continuation_value(&empty, 0.0, 0.0, 1.0, 0.05).unwrap(),
            (2.0 / PI).sqrt(),
            epsilon = 1e-15
        );
        let mut unit = DiscreteOccupation::new(g.clone());
        unit.accumulate(0.0, 1.0).unwrap();
        assert!((continuation_value(&unit, 0.0, 0.0, 1.0, 0.05).unwrap() - 1.19682).abs() < 1e-5);
        let mut far = DiscreteOccupation::new(g);
        far.accumulate(-3.0, 1.0).unwrap();
        let v = continuation_value(&far, 3.0, 0.0, 1.0, 0.05).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() <= 1e-8);
        // terminal rule
        assert_relative_eq!(
            continuation_value(&unit, 0.0, 1.0, 1.0, 0.05).unwrap(),
            1.0 / 0.1,
            epsilon = 1e-12
        );
    }
}
