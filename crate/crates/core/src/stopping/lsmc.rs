use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::result::StoppingResult;
use crate::error::{OccError, Result};
use crate::rng::{antithetic_source, path_rng};
use crate::stats::mean_stderr;

/// Stream offset separating the fresh evaluation paths from the training paths.
const ONLINE_STREAM: usize = 1 << 40;

/// Random walk on the nodes `m sqrt(3 dt)` with steps `-1, 0, +1` taken with
/// probabilities `1/6, 2/3, 1/6`; returns node indices `m_0 = 0, .., m_N`.
pub fn trinomial_path(seed: u64, stream: usize, n_paths: usize, antithetic: bool, n_steps: usize) -> Vec<i32> {
    let (src, sign) = antithetic_source(stream % ONLINE_STREAM, n_paths, antithetic);
    let mut rng = path_rng(seed, src + (stream / ONLINE_STREAM) * ONLINE_STREAM);
    let s = if sign < 0.0 { -1 } else { 1 };
    let mut m = 0i32;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(0);
    for _ in 0..n_steps {
        let u: f64 = rng.random();
        let step = if u < 1.0 / 6.0 {
            -1
        } else if u >= 5.0 / 6.0 {
            1
        } else {
            0
        };
        m += s * step;
        out.push(m);
    }
    out
}

/// Settings of the regression-based stopping rule on the trinomial walk.
#[derive(Debug, Clone, PartialEq)]
pub struct LsmcConfig {
    /// Truncation radius: local times at `2 mbar + 1` nodes around the spot.
    pub mbar: usize,
    pub n_steps: usize,
    pub n_offline: usize,
    pub n_online: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Damp the Laguerre polynomials by `exp(-x/2)`. Heavy-tailed features
    /// such as `e^X` otherwise dominate small training sets.
    pub weighted_basis: bool,
}

impl Default for LsmcConfig {
    fn default() -> Self {
        Self {
            mbar: 0,
            n_steps: 400,
            n_offline: 1 << 11,
            n_online: 1 << 14,
            horizon: 1.0,
            seed: 0,
            weighted_basis: true,
        }
    }
}

impl LsmcConfig {
    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || self.n_steps == 0 {
            return Err(OccError::Config("horizon and n_steps must be positive".into()));
        }
        if self.mbar >= self.n_steps {
            return Err(OccError::Config(format!(
                "truncation {} must be below the step count {}",
                self.mbar, self.n_steps
            )));
        }
        for (name, j) in [("offline", self.n_offline), ("online", self.n_online)] {
            if j == 0 || j % 2 != 0 {
                return Err(OccError::Config(format!(
                    "{name} path count must be even and positive, got {j}"
                )));
            }
        }
        Ok(())
    }

    /// Number of regression functions: an intercept and three polynomials per feature.
    pub fn n_basis(&self) -> usize {
        1 + 3 * (2 * self.mbar + 2)
    }
}

/// Laguerre polynomials of degree 1 to 3.
fn laguerre(x: f64) -> [f64; 3] {
    let x2 = x * x;
    [1.0 - x, 0.5 * (x2 - 4.0 * x + 2.0), (-x2 * x + 9.0 * x2 - 18.0 * x + 6.0) / 6.0]
}

struct Lattice {
    n_steps: usize,
    dx: f64,
    /// Local time per visit, `dt / 2 eps`.
    unit: f64,
    mbar: usize,
    weighted: bool,
}

impl Lattice {
    fn eligible(&self, n: usize, m: i32) -> bool {
        n >= self.mbar && m.unsigned_abs() as usize <= n - self.mbar
    }

    fn index(&self, m: i32) -> usize {
        (m + self.n_steps as i32) as usize
    }

    fn features(&self, counts: &[u32], m: i32, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        let mut push = |v: f64| {
            let damp = if self.weighted { (-0.5 * v).exp() } else { 1.0 };
            for p in laguerre(v) {
                out.push(p * damp);
            }
        };
        let r = self.mbar as i32;
        for k in -r..=r {
            push(self.unit * counts[self.index(m + k)] as f64);
        }
        push((m as f64 * self.dx).exp());
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares with a ridge fallback when the normal equations are
/// (numerically) singular. Returns the coefficients and whether ridge was used.
fn regress(rows: &[Vec<f64>], targets: &[f64], k: usize) -> (Vec<f64>, bool) {
    const CHUNK: usize = 256;
    // fixed chunking keeps the sums independent of the thread count
    let parts: Vec<(Vec<f64>, Vec<f64>)> = rows
        .par_chunks(CHUNK)
        .zip(targets.par_chunks(CHUNK))
        .map(|(rs, ys)| {
            let mut a = vec![0.0; k * k];
            let mut b = vec![0.0; k];
            for (r, y) in rs.iter().zip(ys) {
                for i in 0..k {
                    b[i] += r[i] * y;
                    for j in 0..=i {
                        a[i * k + j] += r[i] * r[j];
                    }
                }
            }
            (a, b)
        })
        .collect();
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (pa, pb) in &parts {
        for i in 0..k {
            b[i] += pb[i];
            for j in 0..=i {
                a[(i, j)] += pa[i * k + j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
        }
    }
    if let Some(beta) = solve_spd(&a, &b) {
        return (beta, false);
    }
    let lambda = 1e-8 * a.trace() / k as f64;
    log::debug!("singular regression, ridge lambda={lambda:e}");
    let mut ridged = a.clone();
    for i in 0..k {
        ridged[(i, i)] += lambda.max(f64::MIN_POSITIVE);
    }
    let beta = solve_spd(&ridged, &b).unwrap_or_else(|| {
        ridged
            .svd(true, true)
            .solve(&b, 1e-12)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_else(|_| vec![0.0; k])
    });
    (beta, true)
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<Vec<f64>> {
    let chol = a.clone().cholesky()?;
    let l = chol.l();
    let diag: Vec<f64> = (0..a.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-13 * max) {
        return None;
    }
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Regression-based stopping of the spot local time on the trinomial walk:
/// backward induction on training paths fixes per-step coefficients, then
/// fresh paths are stopped with them.
pub fn lsmc_value(cfg: &LsmcConfig) -> Result<StoppingResult> {
    cfg.validate()?;
    let n = cfg.n_steps;
    let dt = cfg.horizon / n as f64;
    let dx = (3.0 * dt).sqrt();
    let eps = 0.5 * dx;
    let lat = Lattice {
        n_steps: n,
        dx,
        unit: dt / (2.0 * eps),
        mbar: cfg.mbar,
        weighted: cfg.weighted_basis,
    };
    let k = cfg.n_basis();
    let first = cfg.mbar.max(1);

    // training phase
    let paths: Vec<Vec<i32>> = (0..cfg.n_offline)
        .into_par_iter()
        .map(|j| trinomial_path(cfg.seed, j, cfg.n_offline, true, n))
        .collect();
    let mut counts: Vec<Vec<u32>> = paths
        .par_iter()
        .map(|p| {
            let mut c = vec![0u32; 2 * n + 1];
            for &m in &p[1..] {
                c[lat.index(m)] += 1;
            }
            c
        })
        .collect();
    let mut y: Vec<f64> = paths
        .iter()
        .zip(&counts)
        .map(|(p, c)| lat.unit * c[lat.index(p[n])] as f64)
        .collect();
    let mut coefficients: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut ridge_fallbacks = 0;
    for step in (first..n).rev() {
        counts.par_iter_mut().zip(&paths).for_each(|(c, p)| {
            c[lat.index(p[step + 1])] -= 1;
        });
        let eligible: Vec<usize> = (0..paths.len()).filter(|&j| lat.eligible(step, paths[j][step])).collect();
        if eligible.is_empty() {
            continue;
        }
        let rows: Vec<Vec<f64>> = eligible
            .par_iter()
            .map(|&j| {
                let mut f = Vec::with_capacity(k);
                lat.features(&counts[j], paths[j][step], &mut f);
                f
            })
            .collect();
        let targets: Vec<f64> = eligible.iter().map(|&j| y[j]).collect();
        let (beta, ridged) = regress(&rows, &targets, k);
        if ridged {
            ridge_fallbacks += 1;
        }
        for (row, &j) in rows.iter().zip(&eligible) {
            let intrinsic = lat.unit * counts[j][lat.index(paths[j][step])] as f64;
            if intrinsic >= dot(&beta, row) {
                y[j] = intrinsic;
            }
        }
        coefficients[step] = Some(beta);
    }
    if ridge_fallbacks > 0 {
        log::info!("{ridge_fallbacks} regressions used the ridge fallback");
    }
    let offline = mean_stderr(&y, true)?;

    // evaluation phase
    let out: Vec<(f64, usize)> = (0..cfg.n_online)
        .into_par_iter()
        .map(|j| {
            let p = trinomial_path(cfg.seed, ONLINE_STREAM + j, cfg.n_online, true, n);
            let mut c = vec![0u32; 2 * n + 1];
            let mut f = Vec::with_capacity(k);
            for step in 1..=n {
                let m = p[step];
                c[lat.index(m)] += 1;
                let intrinsic = lat.unit * c[lat.index(m)] as f64;
                if step == n {
                    return (intrinsic, n);
                }
                if step < first || !lat.eligible(step, m) {
                    continue;
                }
                if let Some(beta) = &coefficients[step] {
                    lat.features(&c, m, &mut f);
                    if intrinsic >= dot(beta, &f) {
                        return (intrinsic, step);
                    }
                }
            }
            unreachable!("loop returns at the final step")
        })
        .collect();
    let values: Vec<f64> = out.iter().map(|v| v.0).collect();
    let stops: Vec<usize> = out.iter().map(|v| v.1).collect();
    let est = mean_stderr(&values, true)?;
    let mut res = StoppingResult::from_stops(est, format!("lsmc(mbar={})", cfg.mbar), &stops, n, dt);
    res.coefficients = Some(coefficients);
    res.offline = Some(offline);
    res.ridge_fallbacks = ridge_fallbacks;
    Ok(res)
}
