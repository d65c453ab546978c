//! Local volatility corrected by the spread between a path's occupation flow
//! and its spot-conditional expectation, simulated with the particle method.

mod model;
mod projection;
mod sensitivity;

pub use model::{
    check_positivity, lov_variance, simulate_lov, GammaScale, LovConfig, LovRun, LovVariance,
    PositivityReport,
};
pub use projection::{bandwidth, particle_projection, quartic_kernel};
pub use sensitivity::Sensitivity;
