use crate::error::{OccError, Result};

/// Clock driving an occupation flow: the weight given to the current level
/// over one time step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Clock {
    /// `dt`
    #[default]
    Calendar,
    /// `exp(kappa t) dt`, emphasising recent history.
    Exponential { kappa: f64 },
    /// `sigma^2 dt`, the realised-variance clock.
    QuadraticVariation,
}

impl Clock {
    pub fn exponential(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(OccError::Config(format!(
                "exponential clock rate must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Clock::Exponential { kappa })
    }

    /// Increment over `[t, t + dt)`; `vol` is the step volatility and is only
    /// read by the quadratic-variation clock.
    pub fn increment(&self, t: f64, dt: f64, vol: Option<f64>) -> Result<f64> {
        match *self {
            Clock::Calendar => Ok(dt),
            Clock::Exponential { kappa } => {
                if kappa == 0.0 {
                    Ok(dt)
                } else {
                    Ok((kappa * t).exp() * dt)
                }
            }
            Clock::QuadraticVariation => match vol {
                Some(s) => Ok(s * s * dt),
                None => Err(OccError::Config(
                    "quadratic-variation clock needs the step volatility".into(),
                )),
            },
        }
    }

    pub fn needs_vol(&self) -> bool {
        matches!(self, Clock::QuadraticVariation)
    }

    /// Same flow up to the `Exponential(0) == Calendar` identification.
    pub fn equivalent(&self, other: &Clock) -> bool {
        self.normalized() == other.normalized()
    }

    fn normalized(&self) -> Clock {
        match *self {
            Clock::Exponential { kappa: 0.0 } => Clock::Calendar,
            c => c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments() {
        assert_eq!(Clock::Calendar.increment(3.0, 0.01, None).unwrap(), 0.01);
        let e = Clock::exponential(2.0).unwrap();
        assert!((e.increment(0.5, 0.01, None).unwrap() - 1f64.exp() * 0.01).abs() < 1e-15);
        assert_eq!(
            Clock::exponential(0.0).unwrap().increment(9.0, 0.01, None).unwrap(),
            0.01
        );
        assert!((Clock::QuadraticVariation.increment(0.0, 0.01, Some(0.2)).unwrap() - 4e-4).abs() < 1e-18);
        assert!(Clock::QuadraticVariation.increment(0.0, 0.01, None).is_err());
    }

    #[test]
    fn exponential_zero_is_calendar() {
        assert!(Clock::Exponential { kappa: 0.0 }.equivalent(&Clock::Calendar));
        assert!(!Clock::Exponential { kappa: 1.0 }.equivalent(&Clock::Calendar));
        assert!(Clock::exponential(-1.0).is_err());
    }
}
