use std::io::Read;

use serde::Deserialize;

use crate::error::{OccError, Result};
use crate::occupation::DiscreteOccupation;

/// Volatility read from the occupation flow, the spot and the time.
pub trait VolatilityFunctional: Sync {
    fn vol(&self, occ: &DiscreteOccupation, x: f64, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantVol(pub f64);

impl VolatilityFunctional for ConstantVol {
    fn vol(&self, _occ: &DiscreteOccupation, _x: f64, _t: f64) -> f64 {
        self.0
    }
}

/// Local volatility tabulated on a `(t, x)` rectangle; bilinear inside,
/// flat outside.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVolTable {
    times: Vec<f64>,
    levels: Vec<f64>,
    /// Row-major, one row per time.
    vols: Vec<f64>,
}

impl LocalVolTable {
    pub fn new(times: Vec<f64>, levels: Vec<f64>, vols: Vec<f64>) -> Result<Self> {
        if times.is_empty() || levels.is_empty() || vols.len() != times.len() * levels.len() {
            return Err(OccError::Dimension(format!(
                "{} x {} table needs {} vols, got {}",
                times.len(),
                levels.len(),
                times.len() * levels.len(),
                vols.len()
            )));
        }
        for axis in [&times, &levels] {
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(OccError::Config("table axes must be strictly increasing".into()));
            }
        }
        if vols.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(OccError::Config("local vols must be positive and finite".into()));
        }
        Ok(Self { times, levels, vols })
    }

    pub fn constant(sigma: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![0.0], vec![sigma])
    }

    /// Reads `t,x,vol` rows covering a full rectangle, in any order.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            x: f64,
            vol: f64,
        }
        let mut rows = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize::<Row>() {
            rows.push(row.map_err(|e| OccError::Format(e.to_string()))?);
        }
        let axis = |f: &dyn Fn(&Row) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let times = axis(&|r| r.t);
        let levels = axis(&|r| r.x);
        let mut vols = vec![f64::NAN; times.len() * levels.len()];
        for r in &rows {
            let i = times.partition_point(|t| *t < r.t);
            let j = levels.partition_point(|x| *x < r.x);
            vols[i * levels.len() + j] = r.vol;
        }
        if rows.len() != vols.len() || vols.iter().any(|v| v.is_nan()) {
            return Err(OccError::Format(
                "local vol table must list every (t, x) pair exactly once".into(),
            ));
        }
        Self::new(times, levels, vols)
    }

    pub fn at(&self, t: f64, x: f64) -> f64 {
        let (i0, i1, wt) = bracket(&self.times, t);
        let (j0, j1, wx) = bracket(&self.levels, x);
        let n = self.levels.len();
        let row = |i: usize| (1.0 - wx) * self.vols[i * n + j0] + wx * self.vols[i * n + j1];
        (1.0 - wt) * row(i0) + wt * row(i1)
    }

    /// Smallest tabulated vol; a lower bound of the interpolant.
    pub fn min_vol(&self) -> f64 {
        self.vols.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

fn bracket(axis: &[f64], v: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || v <= axis[0] {
        return (0, 0, 0.0);
    }
    if v >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let k = axis.partition_point(|a| *a <= v);
    let (a, b) = (axis[k - 1], axis[k]);
    (k - 1, k, (v - a) / (b - a))
}

impl VolatilityFunctional for LocalVolTable {
    fn vol(&self, _occ: &DiscreteOccupation, x: f64, t: f64) -> f64 {
        self.at(t, x)
    }
}

/// Occupation barycenter; for the exponential clock this is the EMA of the path.
pub fn ema(occ: &DiscreteOccupation) -> Result<f64> {
    occ.barycenter()
}

/// Trend-driven volatility `Sigma(x / EMA) = -alpha/beta + gamma (x / EMA)^(-beta)`,
/// clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuyonToyVol {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// EMA used before any mass has accumulated.
    pub x0: f64,
}

impl GuyonToyVol {
    pub fn new(alpha: f64, beta: f64, gamma: f64, x0: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && gamma > 0.0 && x0 > 0.0) {
            return Err(OccError::Config(
                "alpha, beta, gamma and x0 must be positive".into(),
            ));
        }
        Ok(Self { alpha, beta, gamma, x0 })
    }

    pub fn sigma_of_trend(&self, trend: f64) -> f64 {
        (-self.alpha / self.beta + self.gamma * trend.powf(-self.beta)).max(0.0)
    }
}

impl VolatilityFunctional for GuyonToyVol {
    fn vol(&self, occ: &DiscreteOccupation, x: f64, _t: f64) -> f64 {
        let avg = ema(occ).unwrap_or(self.x0);
        self.sigma_of_trend(x / avg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::{make_grid, occupation_from_path, Clock, SampledPath};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn guyon_values() {
        let g = GuyonToyVol::new(2.1, 1.2, 1.9, 100.0).unwrap();
        assert_relative_eq!(g.sigma_of_trend(1.0), 0.15, epsilon = 1e-12);
        assert!(g.sigma_of_trend(0.8) > g.sigma_of_trend(0.9));
        assert_eq!(g.sigma_of_trend(10.0), 0.0);
        let empty = DiscreteOccupation::new(Arc::new(make_grid(100.0, 50.0, 101).unwrap()));
        assert_relative_eq!(g.vol(&empty, 100.0, 0.0), 0.15, epsilon = 1e-12);
    }

    #[test]
    fn ema_of_linear_path() {
        let grid = Arc::new(make_grid(0.5, 0.5, 101).unwrap());
        let n = 2000;
        let dt = 1.0 / n as f64;
        let p = SampledPath::uniform(dt, (0..=n).map(|i| i as f64 * dt).collect()).unwrap();
        let occ = occupation_from_path(&p, Clock::Calendar, grid.clone(), None).unwrap();
        assert!((ema(&occ).unwrap() - 0.5).abs() <= dt);
        let k = 4.0f64;
        let occ = occupation_from_path(&p, Clock::exponential(k).unwrap(), grid, None).unwrap();
        let exact = ((k - 1.0) * k.exp() + 1.0) / (k * k) / ((k.exp() - 1.0) / k);
        assert!((ema(&occ).unwrap() - exact).abs() <= dt);
    }

    #[test]
    fn table_interpolation() {
        let t = LocalVolTable::new(vec![0.0, 1.0], vec![90.0, 110.0], vec![0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_relative_eq!(t.at(0.0, 100.0), 0.25, epsilon = 1e-15);
        assert_relative_eq!(t.at(0.5, 100.0), 0.35, epsilon = 1e-15);
        assert_relative_eq!(t.at(2.0, 50.0), 0.4, epsilon = 1e-15);
        assert_eq!(t.min_vol(), 0.2);
        let csv = "t,x,vol\n1,110,0.5\n0,90,0.2\n0,110,0.3\n1,90,0.4\n";
        assert_eq!(LocalVolTable::from_csv(csv.as_bytes()).unwrap(), t);
        assert!(LocalVolTable::from_csv("t,x,vol\n0,90,0.2\n1,110,0.5\n".as_bytes()).is_err());
        assert!(LocalVolTable::new(vec![0.0], vec![1.0], vec![-0.1]).is_err());
    }
}
