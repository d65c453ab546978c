//! Published benchmark values for the Brownian spot local time problem with
//! `T = 1`, `N = 400`, `eps = 0.05` and `2^14` evaluation paths.

/// One benchmark row: `param` is the exercise date, inspection date or
/// truncation level of the row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub param: f64,
    pub value: f64,
    /// Monte Carlo error of the published value; `None` for closed forms.
    pub stderr: Option<f64>,
}

/// Absolute tolerance when comparing a Monte Carlo estimate with a benchmark.
pub const TOLERANCE: f64 = 0.03;

/// Exercise dates `{0.5, 1}`.
pub const TWO_DATE: Benchmark = Benchmark { param: 0.5, value: 0.8455, stderr: Some(0.0050) };

/// Exercise at maturity only, `sqrt(2 / pi)` rounded.
pub const EUROPEAN: Benchmark = Benchmark { param: 1.0, value: 0.7979, stderr: None };

/// Inspection rule by inspection date.
pub const INSPECTION: [Benchmark; 5] = [
    Benchmark { param: 0.5, value: 1.0404, stderr: Some(0.0035) },
    Benchmark { param: 0.6, value: 1.0897, stderr: Some(0.0040) },
    Benchmark { param: 0.7, value: 1.1116, stderr: Some(0.0046) },
    Benchmark { param: 0.8, value: 1.0892, stderr: Some(0.0052) },
    Benchmark { param: 0.9, value: 1.0182, stderr: Some(0.0056) },
];

/// Regression rule on every grid date, by truncation level.
pub const LSMC: [Benchmark; 5] = [
    Benchmark { param: 0.0, value: 1.1916, stderr: Some(0.0044) },
    Benchmark { param: 1.0, value: 1.2180, stderr: Some(0.0031) },
    Benchmark { param: 2.0, value: 1.2252, stderr: Some(0.0030) },
    Benchmark { param: 3.0, value: 1.2277, stderr: Some(0.0030) },
    Benchmark { param: 5.0, value: 1.2296, stderr: Some(0.0030) },
];

impl Benchmark {
    pub fn within(&self, estimate: f64, tol: f64) -> bool {
        (estimate - self.value).abs() <= tol
    }
}
