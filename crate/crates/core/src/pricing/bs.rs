use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{OccError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionType {
    Call,
    Put,
}

impl OptionType {
    pub fn sign(&self) -> f64 {
        match self {
            OptionType::Call => 1.0,
            OptionType::Put => -1.0,
        }
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Black-Scholes price of a European call or put with continuous dividend yield `q`.
pub fn bs_price(s0: f64, k: f64, t: f64, r: f64, q: f64, sigma: f64, kind: OptionType) -> f64 {
    let eta = kind.sign();
    let df = (-r * t).exp();
    let fwd = s0 * ((r - q) * t).exp();
    let sd = sigma * t.sqrt();
    if sd <= 0.0 || k <= 0.0 {
        return df * (eta * (fwd - k)).max(0.0);
    }
    let d1 = ((fwd / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    eta * df * (fwd * norm_cdf(eta * d1) - k * norm_cdf(eta * d2))
}

/// `d price / d sigma`, the same for calls and puts.
pub fn bs_vega(s0: f64, k: f64, t: f64, r: f64, q: f64, sigma: f64) -> f64 {
    let sd = sigma * t.sqrt();
    if sd <= 0.0 || k <= 0.0 {
        return 0.0;
    }
    let fwd = s0 * ((r - q) * t).exp();
    let d1 = ((fwd / k).ln() + 0.5 * sd * sd) / sd;
    s0 * (-q * t).exp() * norm_pdf(d1) * t.sqrt()
}

/// Volatility reproducing `price` to `1e-10 S0` with a volatility step below
/// `1e-12`, found by Newton steps kept inside a shrinking bracket (bisection
/// whenever Newton leaves it).
pub fn implied_vol(price: f64, s0: f64, k: f64, t: f64, r: f64, q: f64, kind: OptionType) -> Result<f64> {
    if !(s0 > 0.0 && k > 0.0 && t > 0.0) {
        return Err(OccError::Domain(format!(
            "implied vol needs S0, K, T > 0, got S0={s0}, K={k}, T={t}"
        )));
    }
    let lower = bs_price(s0, k, t, r, q, 0.0, kind);
    let upper = match kind {
        OptionType::Call => s0 * (-q * t).exp(),
        OptionType::Put => k * (-r * t).exp(),
    };
    let tol = 1e-10 * s0;
    if !(price > lower && price < upper) {
        if (price - lower).abs() <= tol {
            return Ok(0.0);
        }
        return Err(OccError::NoSolution(format!(
            "price {price} outside the no-arbitrage range ({lower}, {upper}) for K={k}, T={t}"
        )));
    }
    let f = |s: f64| bs_price(s0, k, t, r, q, s, kind) - price;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(OccError::NoSolution(format!("no volatility below 1e4 reaches {price}")));
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(s);
        let vega = bs_vega(s0, k, t, r, q, s);
        if v.abs() < tol && (hi - lo < 1e-12 || (v / vega).abs() < 1e-12) {
            return Ok(s);
        }
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - v / vega;
        s = if vega > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(OccError::NoSolution(format!("implied vol did not converge for price {price}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        // S=100, K=100, T=1, r=5%, sigma=20%: 10.4506 / 5.5735
        assert!((bs_price(100.0, 100.0, 1.0, 0.05, 0.0, 0.2, OptionType::Call) - 10.450_583_572_185_565).abs() < 1e-10);
        assert!((bs_price(100.0, 100.0, 1.0, 0.05, 0.0, 0.2, OptionType::Put) - 5.573_526_022_256_971).abs() < 1e-10);
        assert!((bs_vega(100.0, 100.0, 1.0, 0.05, 0.0, 0.2) - 37.524_034_691_693_8).abs() < 1e-9);
    }

    #[test]
    fn limits() {
        let c = bs_price(100.0, 1e-9, 2.0, 0.03, 0.01, 0.3, OptionType::Call);
        assert!((c - (100.0 * (-0.02f64).exp() - 1e-9 * (-0.06f64).exp())).abs() < 1e-10);
        assert_eq!(bs_price(100.0, 90.0, 1.0, 0.0, 0.0, 0.0, OptionType::Call), 10.0);
        // at-the-money approximation 0.4 S sigma sqrt(T) exp(-rT), zero carry
        for (sigma, t) in [(0.1, 1.0), (0.2, 1.0), (0.4, 0.25)] {
            let exact = bs_price(100.0, 100.0, t, 0.02, 0.02, sigma, OptionType::Call);
            let approx = 0.4 * 100.0 * sigma * f64::sqrt(t) * (-0.02 * t).exp();
            assert!((approx / exact - 1.0).abs() < 0.01, "{exact} {approx}");
        }
    }

    #[test]
    fn implied_vol_round_trip_and_bounds() {
        for sigma in [0.05, 0.2, 1.0] {
            for (k, kind) in [(80.0, OptionType::Put), (100.0, OptionType::Call), (130.0, OptionType::Call)] {
                let p = bs_price(100.0, k, 0.5, 0.01, 0.02, sigma, kind);
                let iv = implied_vol(p, 100.0, k, 0.5, 0.01, 0.02, kind).unwrap();
                assert!((iv - sigma).abs() < 1e-8, "{sigma} {k} {iv}");
            }
        }
        assert!(implied_vol(150.0, 100.0, 100.0, 1.0, 0.0, 0.0, OptionType::Call).is_err());
        assert!(implied_vol(-1.0, 100.0, 100.0, 1.0, 0.0, 0.0, OptionType::Call).is_err());
    }

    proptest! {
        #[test]
        fn put_call_parity(k in 50.0f64..150.0, t in 0.05f64..3.0, sigma in 0.01f64..1.0) {
            let c = bs_price(100.0, k, t, 0.03, 0.01, sigma, OptionType::Call);
            let p = bs_price(100.0, k, t, 0.03, 0.01, sigma, OptionType::Put);
            let parity = 100.0 * (-0.01 * t).exp() - k * (-0.03 * t).exp();
            prop_assert!((c - p - parity).abs() < 1e-9);
            prop_assert!(c >= 0.0 && p >= 0.0);
        }
    }
}
