//! Per-path random streams.
//!
//! Every path owns an independent ChaCha stream selected by its index, so
//! draws depend only on `(seed, path, step)` and never on scheduling or on
//! the total number of paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random stream for path `path` under master seed `seed`.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// `n` standard normal variates from the stream of `path`.
pub fn normals(seed: u64, path: usize, n: usize) -> Vec<f64> {
    let mut rng = path_rng(seed, path);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Source path index and sign for antithetic ensembles: paths in the upper
/// half mirror the lower half with negated draws.
pub fn antithetic_source(path: usize, n_paths: usize, antithetic: bool) -> (usize, f64) {
    if antithetic && path >= n_paths / 2 {
        (path - n_paths / 2, -1.0)
    } else {
        (path, 1.0)
    }
}
