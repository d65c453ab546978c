use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::CorridorGrid;
use crate::error::{OccError, Result};

/// Binned occupation measure with exact side accumulators.
///
/// Bin masses carry the measure itself; total mass, first moment and the
/// visited range are tracked exactly so that linear and extremal
/// functionals (averages, running extrema) carry no binning error.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOccupation {
    grid: Arc<CorridorGrid>,
    masses: Vec<f64>,
    total_mass: f64,
    first_moment: f64,
    range: Option<(f64, f64)>,
}

/// Corridor `(level - half_width, level + half_width)` for local time estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTimeQuery {
    level: f64,
    half_width: f64,
}

impl LocalTimeQuery {
    pub fn new(level: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(OccError::Domain(format!(
                "corridor half width must be positive, got {half_width}"
            )));
        }
        Ok(Self { level, half_width })
    }

    /// Brownian-scale corridor `c * sqrt(dt)`.
    pub fn brownian_scale(level: f64, c: f64, dt: f64) -> Result<Self> {
        Self::new(level, c * dt.sqrt())
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

/// Integrand for [`DiscreteOccupation::integral`]. `Constant` and `Identity`
/// are answered from the exact accumulators.
pub enum OccupationIntegrand<'a> {
    Constant(f64),
    Identity,
    Function(&'a dyn Fn(f64) -> f64),
}

/// Order of the distance between two occupations on the same grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricOrder {
    /// Total variation over bins.
    One,
    /// Largest difference of bin densities (mass / width).
    Infinity,
}

impl DiscreteOccupation {
    pub fn new(grid: Arc<CorridorGrid>) -> Self {
        let m = grid.len();
        Self {
            grid,
            masses: vec![0.0; m],
            total_mass: 0.0,
            first_moment: 0.0,
            range: None,
        }
    }

    /// Empty occupation whose support starts at `x0`, matching the
    /// `supp O_0 = {X_0}` convention.
    pub fn starting_at(grid: Arc<CorridorGrid>, x0: f64) -> Self {
        let mut occ = Self::new(grid);
        occ.observe(x0);
        occ
    }

    pub fn grid(&self) -> &CorridorGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<CorridorGrid> {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, m: usize) -> f64 {
        self.masses[m]
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        self.range
    }

    /// Adds `weight` of clock time at `level`.
    pub fn accumulate(&mut self, level: f64, weight: f64) -> Result<()> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(OccError::Domain(format!(
                "occupation weight must be finite and >= 0, got {weight}"
            )));
        }
        if !level.is_finite() {
            return Err(OccError::Domain(format!("non-finite level {level}")));
        }
        let m = self.grid.bin_index(level);
        self.masses[m] += weight;
        self.total_mass += weight;
        self.first_moment += level * weight;
        self.observe(level);
        Ok(())
    }

    /// Records `level` in the visited range without adding mass.
    pub fn observe(&mut self, level: f64) {
        self.range = Some(match self.range {
            None => (level, level),
            Some((lo, hi)) => (lo.min(level), hi.max(level)),
        });
    }

    /// Bin-wise sum with another occupation on the same grid (time additivity).
    pub fn add(&mut self, other: &DiscreteOccupation) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.masses.iter_mut().zip(&other.masses) {
            *a += b;
        }
        self.total_mass += other.total_mass;
        self.first_moment += other.first_moment;
        if let Some((lo, hi)) = other.range {
            self.observe(lo);
            self.observe(hi);
        }
        Ok(())
    }

    /// Mass of `[lo, hi]`, pro-rating partially covered bins as if their
    /// mass were spread uniformly.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let edges = self.grid.edges();
        if lo <= edges[0] && hi >= edges[edges.len() - 1] {
            return self.total_mass;
        }
        let first = self.grid.bin_index(lo);
        let last = self.grid.bin_index(hi);
        let mut mass = 0.0;
        for m in first..=last {
            let w = self.masses[m];
            if w == 0.0 {
                continue;
            }
            let (l, r) = self.grid.bin_bounds(m);
            let overlap = hi.min(r) - lo.max(l);
            if overlap > 0.0 {
                mass += w * (overlap / (r - l)).min(1.0);
            }
        }
        mass
    }

    /// Corridor estimate `O(B_eps(x)) / (2 eps)` of the local time at `q.level()`.
    pub fn local_time(&self, q: &LocalTimeQuery) -> f64 {
        let eps = q.half_width();
        self.mass_in(q.level() - eps, q.level() + eps) / (2.0 * eps)
    }

    /// Local time at the current spot; the reward of the stopping problems.
    pub fn spot_local_time(&self, spot: f64, half_width: f64) -> Result<f64> {
        Ok(self.local_time(&LocalTimeQuery::new(spot, half_width)?))
    }

    /// `sum_m f(x_m) O_m`, with exact accumulators for constant and identity integrands.
    pub fn integral(&self, f: OccupationIntegrand<'_>) -> f64 {
        match f {
            OccupationIntegrand::Constant(c) => c * self.total_mass,
            OccupationIntegrand::Identity => self.first_moment,
            OccupationIntegrand::Function(g) => self
                .grid
                .nodes()
                .iter()
                .zip(&self.masses)
                .filter(|(_, w)| **w != 0.0)
                .map(|(x, w)| g(*x) * w)
                .sum(),
        }
    }

    /// Barycenter `first_moment / total_mass`.
    pub fn barycenter(&self) -> Result<f64> {
        if self.total_mass > 0.0 {
            Ok(self.first_moment / self.total_mass)
        } else {
            Err(OccError::EmptyOccupation)
        }
    }

    pub fn metric(&self, other: &DiscreteOccupation, order: MetricOrder) -> Result<f64> {
        self.check_same_grid(other)?;
        let diffs = self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs());
        Ok(match order {
            MetricOrder::One => diffs.sum(),
            MetricOrder::Infinity => diffs
                .enumerate()
                .map(|(m, d)| d / self.grid.bin_width(m))
                .fold(0.0, f64::max),
        })
    }

    /// Exact `(min, max)` of recorded levels.
    pub fn support_bounds(&self) -> Result<(f64, f64)> {
        self.range.ok_or(OccError::EmptySupport)
    }

    fn check_same_grid(&self, other: &DiscreteOccupation) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(OccError::Dimension(
                "occupations live on different grids".into(),
            ))
        }
    }

    /// Writes `node,mass` rows followed by a trailer comment with the exact accumulators.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (x, mass) in self.grid.nodes().iter().zip(&self.masses) {
            w.serialize(CsvRow { node: *x, mass: *mass })
                .map_err(|e| OccError::Format(e.to_string()))?;
        }
        let mut out = w.into_inner().map_err(|e| OccError::Format(e.to_string()))?;
        let (lo, hi) = match self.range {
            Some((lo, hi)) => (lo.to_string(), hi.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "# total_mass={},first_moment={},min={lo},max={hi}",
            self.total_mass, self.first_moment
        )
        .map_err(|e| OccError::Format(e.to_string()))?;
        Ok(())
    }

    /// Reads the format of [`write_csv`](Self::write_csv); nodes must match `grid`.
    pub fn read_csv<R: Read>(mut input: R, grid: Arc<CorridorGrid>) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| OccError::Format(e.to_string()))?;
        let trailer = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("# total_mass="))
            .ok_or_else(|| OccError::Format("missing accumulator trailer".into()))?
            .to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut occ = Self::new(grid);
        let mut m = 0;
        for row in rdr.deserialize::<CsvRow>() {
            let row = row.map_err(|e| OccError::Format(e.to_string()))?;
            if m >= occ.grid.len() || occ.grid.node(m) != row.node {
                return Err(OccError::Dimension(format!(
                    "row {m} node {} does not match the grid",
                    row.node
                )));
            }
            occ.masses[m] = row.mass;
            m += 1;
        }
        if m != occ.grid.len() {
            return Err(OccError::Dimension(format!(
                "expected {} rows, found {m}",
                occ.grid.len()
            )));
        }
        let mut fields = trailer.split(',');
        let mut next = |key: &str| -> Result<String> {
            let f = fields
                .next()
                .ok_or_else(|| OccError::Format(format!("trailer misses {key}")))?;
            let v = f.strip_prefix(key).unwrap_or(f);
            Ok(v.to_string())
        };
        let parse = |s: String| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| OccError::Format(format!("bad number {s:?}: {e}")))
        };
        occ.total_mass = parse(next("")?)?;
        occ.first_moment = parse(next("first_moment=")?)?;
        let lo = next("min=")?;
        let hi = next("max=")?;
        if !lo.is_empty() && !hi.is_empty() {
            occ.range = Some((parse(lo)?, parse(hi)?));
        }
        Ok(occ)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    node: f64,
    mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupation::grid::make_grid;
    use approx::assert_relative_eq;

    fn grid() -> Arc<CorridorGrid> {
        Arc::new(make_grid(0.0, 2.0, 41).unwrap())
    }

    #[test]
    fn dirac_path_accumulates_horizon() {
        let mut occ = DiscreteOccupation::new(grid());
        let (n, dt) = (100, 0.01);
        for _ in 0..n {
            occ.accumulate(0.3, dt).unwrap();
        }
        let m = occ.grid().bin_index(0.3);
        assert_relative_eq!(occ.mass(m), 1.0, epsilon = 1e-12);
        assert_relative_eq!(occ.total_mass(), 1.0, epsilon = 1e-12);
        assert_eq!(occ.support_bounds().unwrap(), (0.3, 0.3));
    }

    #[test]
    fn zero_weight_leaves_masses() {
        let mut occ = DiscreteOccupation::new(grid());
        occ.accumulate(0.5, 0.0).unwrap();
        assert!(occ.masses().iter().all(|m| *m == 0.0));
        assert_eq!(occ.total_mass(), 0.0);
        assert!(occ.accumulate(0.5, -1e-3).is_err());
    }

    #[test]
    fn exponential_clock_total_mass() {
        // constant path under exp(kappa t) dt has mass (e^{kappa T} - 1)/kappa
        let (kappa, t_end, n) = (3.0f64, 1.0f64, 4000usize);
        let dt = t_end / n as f64;
        let mut occ = DiscreteOccupation::new(grid());
        for i in 0..n {
            occ.accumulate(0.0, (kappa * i as f64 * dt).exp() * dt).unwrap();
        }
        let exact = ((kappa * t_end).exp() - 1.0) / kappa;
        // left Riemann sum error ~ (f(T) - f(0)) dt / 2
        let bound = ((kappa * t_end).exp() - 1.0) * dt;
        assert!((occ.total_mass() - exact).abs() <= bound);
    }

    #[test]
    fn local_time_of_dirac() {
        let g = grid();
        let mut occ = DiscreteOccupation::new(g.clone());
        occ.accumulate(0.0, 1.0).unwrap();
        let m = g.bin_index(0.0);
        let eps = 0.5 * g.bin_width(m);
        let lt = occ.local_time(&LocalTimeQuery::new(0.0, eps).unwrap());
        assert_relative_eq!(lt, 1.0 / (2.0 * eps), epsilon = 1e-12);
        assert_eq!(
            DiscreteOccupation::new(g).local_time(&LocalTimeQuery::new(0.0, 0.1).unwrap()),
            0.0
        );
        assert!(LocalTimeQuery::new(0.0, 0.0).is_err());
    }

    #[test]
    fn spot_far_from_mass_has_zero_local_time() {
        let mut occ = DiscreteOccupation::new(grid());
        occ.accumulate(-1.0, 1.0).unwrap();
        assert_eq!(occ.spot_local_time(1.0, 0.2).unwrap(), 0.0);
        assert!(occ.spot_local_time(-1.0, 0.2).unwrap() > 0.0);
    }

    #[test]
    fn partial_overlap_is_prorated() {
        let g = grid(); // spacing 0.1
        let mut occ = DiscreteOccupation::new(g.clone());
        occ.accumulate(0.0, 1.0).unwrap(); // bin [-0.05, 0.05)
        // corridor (0.0, 0.2) covers half the bin
        let lt = occ.local_time(&LocalTimeQuery::new(0.1, 0.1).unwrap());
        assert_relative_eq!(lt, 0.5 / 0.2, epsilon = 1e-12);
    }

    #[test]
    fn integrals() {
        let g = grid();
        let mut occ = DiscreteOccupation::new(g.clone());
        let levels = [0.13, -0.42, 0.77, 0.13, 1.5];
        for x in levels {
            occ.accumulate(x, 0.25).unwrap();
        }
        assert_eq!(occ.integral(OccupationIntegrand::Constant(1.0)), occ.total_mass());
        let direct: f64 = levels.iter().map(|x| x * 0.25).sum();
        assert_relative_eq!(occ.integral(OccupationIntegrand::Identity), direct, epsilon = 1e-15);
        let m = g.bin_index(0.77);
        let (l, r) = g.bin_bounds(m);
        let ind = move |x: f64| if x >= l && x < r { 1.0 } else { 0.0 };
        assert_eq!(occ.integral(OccupationIntegrand::Function(&ind)), occ.mass(m));
    }

    #[test]
    fn metrics() {
        let g = grid();
        let mut a = DiscreteOccupation::new(g.clone());
        let mut b = DiscreteOccupation::new(g.clone());
        a.accumulate(-1.0, 0.3).unwrap();
        b.accumulate(1.0, 0.7).unwrap();
        assert_eq!(a.metric(&a, MetricOrder::One).unwrap(), 0.0);
        assert_eq!(a.metric(&a, MetricOrder::Infinity).unwrap(), 0.0);
        assert_relative_eq!(a.metric(&b, MetricOrder::One).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(a.metric(&b, MetricOrder::Infinity).unwrap(), 0.7 / 0.1, epsilon = 1e-12);
        // nested occupations differ by the incremental mass
        let mut s = DiscreteOccupation::new(g.clone());
        s.accumulate(0.2, 0.5).unwrap();
        let mut t = s.clone();
        t.accumulate(0.4, 0.25).unwrap();
        t.accumulate(0.2, 0.125).unwrap();
        assert_relative_eq!(
            s.metric(&t, MetricOrder::One).unwrap(),
            t.total_mass() - s.total_mass(),
            epsilon = 1e-15
        );
        let other = DiscreteOccupation::new(Arc::new(make_grid(0.0, 1.0, 5).unwrap()));
        assert!(a.metric(&other, MetricOrder::One).is_err());
    }

    #[test]
    fn support_uses_exact_levels() {
        let mut occ = DiscreteOccupation::new(grid());
        assert_eq!(occ.support_bounds(), Err(OccError::EmptySupport));
        for x in [1.0, 3.0, -2.0] {
            occ.accumulate(x, 0.1).unwrap();
        }
        assert_eq!(occ.support_bounds().unwrap(), (-2.0, 3.0));
        let start = DiscreteOccupation::starting_at(grid(), 0.7);
        assert_eq!(start.support_bounds().unwrap(), (0.7, 0.7));
    }

    #[test]
    fn barycenter_of_empty_errors() {
        let occ = DiscreteOccupation::new(grid());
        assert_eq!(occ.barycenter(), Err(OccError::EmptyOccupation));
    }

    #[test]
    fn csv_layout() {
        let g = Arc::new(make_grid(0.0, 1.0, 3).unwrap());
        let mut occ = DiscreteOccupation::new(g.clone());
        occ.accumulate(0.9, 0.5).unwrap();
        occ.accumulate(-0.1, 0.25).unwrap();
        let mut buf = Vec::new();
        occ.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "node,mass\n-1.0,0.0\n0.0,0.25\n1.0,0.5\n# total_mass=0.75,first_moment=0.425,min=-0.1,max=0.9\n"
        );
        let back = DiscreteOccupation::read_csv(buf.as_slice(), g).unwrap();
        assert_eq!(back, occ);
    }
}
