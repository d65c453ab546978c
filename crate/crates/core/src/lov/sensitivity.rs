use crate::error::{OccError, Result};
use crate::sde::LocalVolTable;

/// Variance sensitivity `l(t, spot, level)` to extra time spent at `level`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sensitivity {
    #[default]
    Zero,
    /// `beta 1_[lo, hi](level)`.
    OneFactor { beta: f64, lo: f64, hi: f64 },
    /// `beta log(level)`.
    Ema { beta: f64 },
    /// `amplitude tanh(alpha (level / spot - center))`.
    Tanh { amplitude: f64, alpha: f64, center: f64 },
}

impl Sensitivity {
    /// Tanh of the moneyness with amplitude `min sigma_loc^2 / 4`, changing sign at the spot.
    pub fn tanh_for(sigma_loc: &LocalVolTable, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(OccError::Config(format!("tanh slope must be > 0, got {alpha}")));
        }
        let floor = sigma_loc.min_vol();
        Ok(Sensitivity::Tanh { amplitude: 0.25 * floor * floor, alpha, center: 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Sensitivity::Zero => true,
            Sensitivity::OneFactor { beta, lo, hi } => beta.is_finite() && lo <= hi,
            Sensitivity::Ema { beta } => beta.is_finite(),
            Sensitivity::Tanh { amplitude, alpha, center } => {
                amplitude.is_finite() && alpha.is_finite() && center.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(OccError::Config(format!("invalid sensitivity {self:?}")))
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Sensitivity::Zero)
    }

    #[inline]
    pub fn eval(&self, _t: f64, spot: f64, level: f64) -> f64 {
        match *self {
            Sensitivity::Zero => 0.0,
            Sensitivity::OneFactor { beta, lo, hi } => {
                if level >= lo && level <= hi {
                    beta
                } else {
                    0.0
                }
            }
            Sensitivity::Ema { beta } => beta * level.ln(),
            Sensitivity::Tanh { amplitude, alpha, center } => {
                amplitude * (alpha * (level / spot - center)).tanh()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let s = Sensitivity::OneFactor { beta: 0.4, lo: 90.0, hi: 110.0 };
        assert_eq!(s.eval(0.0, 100.0, 95.0), 0.4);
        assert_eq!(s.eval(0.0, 100.0, 120.0), 0.0);
        assert_eq!(Sensitivity::Ema { beta: 2.0 }.eval(0.0, 1.0, 1.0), 0.0);
        let table = LocalVolTable::constant(0.2).unwrap();
        let t = Sensitivity::tanh_for(&table, 5.0).unwrap();
        assert_eq!(t.eval(0.0, 100.0, 100.0), 0.0);
        assert!(t.eval(0.0, 100.0, 120.0) > 0.0 && t.eval(0.0, 100.0, 80.0) < 0.0);
        assert!(t.eval(0.0, 100.0, 1e9) <= 0.25 * 0.04 + 1e-15);
        assert!(Sensitivity::tanh_for(&table, 0.0).is_err());
        assert!(Sensitivity::OneFactor { beta: 1.0, lo: 2.0, hi: 1.0 }.validate().is_err());
    }
}
