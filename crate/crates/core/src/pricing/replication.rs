use super::bs::{bs_price, OptionType};
use super::calibration::QuoteRow;
use crate::error::{OccError, Result};

/// Undiscounted vanilla prices on a strike x maturity rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSurface {
    strikes: Vec<f64>,
    maturities: Vec<f64>,
    /// Undiscounted puts `E[(K - X_T)^+]`, one row per maturity.
    puts: Vec<f64>,
    forwards: Vec<f64>,
}

impl PriceSurface {
    pub fn new(strikes: Vec<f64>, maturities: Vec<f64>, puts: Vec<f64>, forwards: Vec<f64>) -> Result<Self> {
        if strikes.len() < 2 || maturities.is_empty() || puts.len() != strikes.len() * maturities.len()
            || forwards.len() != maturities.len()
        {
            return Err(OccError::Dimension("price surface shape mismatch".into()));
        }
        for axis in [&strikes, &maturities] {
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(OccError::Config("surface axes must be strictly increasing".into()));
            }
        }
        if strikes[0] <= 0.0 || maturities[0] < 0.0 {
            return Err(OccError::Config("strikes must be > 0 and maturities >= 0".into()));
        }
        Ok(Self { strikes, maturities, puts, forwards })
    }

    pub fn from_black_scholes(
        s0: f64,
        r: f64,
        q: f64,
        sigma: f64,
        strikes: Vec<f64>,
        maturities: Vec<f64>,
    ) -> Result<Self> {
        let mut puts = Vec::with_capacity(strikes.len() * maturities.len());
        let mut forwards = Vec::with_capacity(maturities.len());
        for &t in &maturities {
            forwards.push(s0 * ((r - q) * t).exp());
            for &k in &strikes {
                puts.push(bs_price(s0, k, t, r, q, sigma, OptionType::Put) * (r * t).exp());
            }
        }
        Self::new(strikes, maturities, puts, forwards)
    }

    /// Surface of mid prices. Every maturity must quote the same strikes;
    /// calls become puts through parity.
    pub fn from_quotes(quotes: &[QuoteRow], s0: f64, r: f64, q: f64) -> Result<Self> {
        let mut maturities: Vec<f64> = quotes.iter().map(|q| q.maturity).collect();
        maturities.sort_by(f64::total_cmp);
        maturities.dedup();
        let mut strikes: Vec<f64> = quotes.iter().map(|q| q.strike).collect();
        strikes.sort_by(f64::total_cmp);
        strikes.dedup();
        let (nk, nt) = (strikes.len(), maturities.len());
        let mut puts = vec![f64::NAN; nk * nt];
        let forwards: Vec<f64> = maturities.iter().map(|t| s0 * ((r - q) * t).exp()).collect();
        for qt in quotes {
            let i = maturities.partition_point(|t| *t < qt.maturity);
            let k = strikes.partition_point(|s| *s < qt.strike);
            let undiscounted = qt.mid() * (r * qt.maturity).exp();
            puts[i * nk + k] = match qt.kind {
                OptionType::Put => undiscounted,
                OptionType::Call => undiscounted - forwards[i] + qt.strike,
            };
        }
        if puts.iter().any(|p| p.is_nan()) {
            return Err(OccError::Format(
                "quotes must cover every (strike, maturity) pair of the grid".into(),
            ));
        }
        Self::new(strikes, maturities, puts, forwards)
    }

    pub fn strikes(&self) -> &[f64] {
        &self.strikes
    }

    pub fn maturities(&self) -> &[f64] {
        &self.maturities
    }

    pub fn put(&self, i: usize, k: usize) -> f64 {
        self.puts[i * self.strikes.len() + k]
    }

    /// Out-of-the-money price: put below the forward, call above.
    pub fn otm(&self, i: usize, k: usize) -> f64 {
        let p = self.put(i, k);
        if self.strikes[k] < self.forwards[i] {
            p
        } else {
            p + self.forwards[i] - self.strikes[k]
        }
    }

    fn maturity_index(&self, t: f64) -> Result<usize> {
        self.maturities
            .iter()
            .position(|m| (m - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| OccError::Extrapolation(format!("maturity {t} is not quoted")))
    }

    /// `d P / d K` at strike `x` for maturity row `i`: central differences on
    /// the grid, linearly interpolated between interior strikes.
    fn put_slope(&self, i: usize, x: f64) -> Result<f64> {
        if x == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        let k = &self.strikes;
        let n = k.len();
        if n < 3 || x < k[1] || x > k[n - 2] {
            return Err(OccError::Extrapolation(format!(
                "strike {x} needs quoted strikes on both sides (grid {}..{})",
                k[0],
                k[n - 1]
            )));
        }
        let d = |j: usize| (self.put(i, j + 1) - self.put(i, j - 1)) / (k[j + 1] - k[j - 1]);
        let j = k.partition_point(|s| *s <= x).clamp(2, n - 2);
        let w = (x - k[j - 1]) / (k[j] - k[j - 1]);
        Ok((1.0 - w) * d(j - 1) + w * d(j))
    }
}

/// Expected quadratic-variation occupation of `[x1, x2]` up to `T`,
/// `2 int_{x1}^{x2} OTM(K, T) / K^2 dK`, by the trapezoid rule on the quoted
/// strikes. Prices are undiscounted; the identity holds for zero carry.
pub fn bl_occupation_strike(surface: &PriceSurface, x1: f64, x2: f64, t: f64) -> Result<f64> {
    if !(x1 <= x2) {
        return Err(OccError::Domain(format!("corridor needs x1 <= x2, got [{x1}, {x2}]")));
    }
    let i = surface.maturity_index(t)?;
    let k = surface.strikes();
    let n = k.len();
    if x1 < k[0] || x2 > k[n - 1] {
        return Err(OccError::Extrapolation(format!(
            "corridor [{x1}, {x2}] leaves the quoted strikes {}..{}",
            k[0],
            k[n - 1]
        )));
    }
    if x1 == x2 {
        return Ok(0.0);
    }
    let f = |j: usize| 2.0 * surface.otm(i, j) / (k[j] * k[j]);
    let at = |x: f64| {
        let j = k.partition_point(|s| *s <= x).clamp(1, n - 1);
        let w = (x - k[j - 1]) / (k[j] - k[j - 1]);
        (1.0 - w) * f(j - 1) + w * f(j)
    };
    let mut nodes = vec![(x1, at(x1))];
    for (j, s) in k.iter().enumerate() {
        if *s > x1 && *s < x2 {
            nodes.push((*s, f(j)));
        }
    }
    nodes.push((x2, at(x2)));
    Ok(nodes.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}

/// Expected calendar time in `[lower(t), upper(t)]` up to `T`,
/// `int_0^T (dP/dK(upper(t), t) - dP/dK(lower(t), t)) dt`, by the trapezoid
/// rule over the quoted maturities. The first maturity must be `0`.
pub fn range_accrual_static(
    surface: &PriceSurface,
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
    t: f64,
) -> Result<f64> {
    let last = surface.maturity_index(t)?;
    let mats = surface.maturities();
    if mats[0] != 0.0 {
        return Err(OccError::Extrapolation("maturities must start at 0".into()));
    }
    let prob = |i: usize| -> Result<f64> {
        let tm = mats[i];
        Ok(surface.put_slope(i, upper(tm))? - surface.put_slope(i, lower(tm))?)
    };
    let mut acc = 0.0;
    let mut prev = prob(0)?;
    for i in 1..=last {
        let cur = prob(i)?;
        acc += 0.5 * (mats[i] - mats[i - 1]) * (prev + cur);
        prev = cur;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::bs::norm_cdf;
    use crate::pricing::calibration::synthetic_quotes;

    fn strikes(lo: f64, hi: f64, h: f64) -> Vec<f64> {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n).map(|i| lo + i as f64 * h).collect()
    }

    #[test]
    fn wide_corridor_recovers_total_variance() {
        let s = PriceSurface::from_black_scholes(100.0, 0.0, 0.0, 0.2, strikes(1.0, 1000.0, 0.25), vec![1.0]).unwrap();
        let v = bl_occupation_strike(&s, 1.0, 1000.0, 1.0).unwrap();
        assert!((v / 0.04 - 1.0).abs() < 1e-3, "{v}");
        assert_eq!(bl_occupation_strike(&s, 100.0, 100.0, 1.0).unwrap(), 0.0);
        assert!(matches!(bl_occupation_strike(&s, 0.5, 10.0, 1.0), Err(OccError::Extrapolation(_))));
        assert!(matches!(bl_occupation_strike(&s, 90.0, 110.0, 0.5), Err(OccError::Extrapolation(_))));
    }

    #[test]
    fn full_corridor_accrues_full_time() {
        let mats: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let s = PriceSurface::from_black_scholes(100.0, 0.02, 0.0, 0.2, strikes(50.0, 200.0, 1.0), mats).unwrap();
        let v = range_accrual_static(&s, |_| f64::NEG_INFINITY, |_| f64::INFINITY, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // zero vol: the path sits at the forward, well inside [60, 190]
        let mats: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let z = PriceSurface::from_black_scholes(100.0, 0.02, 0.0, 0.0, strikes(50.0, 200.0, 1.0), mats).unwrap();
        let v = range_accrual_static(&z, |_| 60.0, |_| 190.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        assert!(range_accrual_static(&z, |_| 50.0, |_| 190.0, 1.0).is_err());
    }

    #[test]
    fn slope_is_the_distribution_function() {
        let mats = vec![0.0, 0.5];
        let s = PriceSurface::from_black_scholes(100.0, 0.0, 0.0, 0.3, strikes(40.0, 250.0, 0.5), mats).unwrap();
        for x in [80.0, 100.0, 123.4] {
            let cdf = norm_cdf(((x / 100.0f64).ln() + 0.5 * 0.09 * 0.5) / (0.3 * 0.5f64.sqrt()));
            assert!((s.put_slope(1, x).unwrap() - cdf).abs() < 1e-4);
        }
    }

    #[test]
    fn surface_from_quotes_matches_model() {
        let ks = strikes(60.0, 150.0, 5.0);
        let qs = synthetic_quotes(100.0, 0.01, 0.0, 0.2, &ks, &[0.5, 1.0], 0.0).unwrap();
        let a = PriceSurface::from_quotes(&qs, 100.0, 0.01, 0.0).unwrap();
        let b = PriceSurface::from_black_scholes(100.0, 0.01, 0.0, 0.2, ks, vec![0.5, 1.0]).unwrap();
        for (x, y) in a.puts.iter().zip(&b.puts) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(PriceSurface::from_quotes(&qs[1..], 100.0, 0.01, 0.0).is_err());
    }
}
