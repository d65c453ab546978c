use crate::stats::MeanEstimate;

/// Outcome of a stopping experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingResult {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    /// Human-readable description of the rule, e.g. `inspection(iota=0.7)`.
    pub strategy: String,
    /// Fraction of paths stopped at each step `0..=N`.
    pub exercise_frequencies: Vec<f64>,
    /// Average stopping time.
    pub mean_stopping_time: f64,
    /// Regression coefficients per step (regression-based rules only).
    pub coefficients: Option<Vec<Option<Vec<f64>>>>,
    /// In-sample estimate of the training phase (regression-based rules only).
    pub offline: Option<MeanEstimate>,
    /// Steps whose regression needed the ridge fallback.
    pub ridge_fallbacks: usize,
}

impl StoppingResult {
    pub(crate) fn from_stops(
        estimate: MeanEstimate,
        strategy: String,
        stop_steps: &[usize],
        n_steps: usize,
        dt: f64,
    ) -> Self {
        let mut freq = vec![0.0; n_steps + 1];
        let w = 1.0 / stop_steps.len() as f64;
        for &n in stop_steps {
            freq[n] += w;
        }
        let mean_stopping_time = stop_steps.iter().map(|n| *n as f64 * dt).sum::<f64>() * w;
        Self {
            value: estimate.mean,
            stderr: estimate.stderr,
            n_paths: estimate.n,
            strategy,
            exercise_frequencies: freq,
            mean_stopping_time,
            coefficients: None,
            offline: None,
            ridge_fallbacks: 0,
        }
    }
}
