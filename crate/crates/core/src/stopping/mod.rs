//! Optimal stopping of the spot local time of Brownian motion.

mod analytic;
mod brownian;
mod lsmc;
pub mod reference;
mod result;
mod sweep;

pub use analytic::{analytic_euro_value, continuation_value, eps_expansion, heat_kernel};
pub use brownian::{
    argmax_local_time, european_value, inspection_value, sample_local_time, two_date_value,
    HitRule, ScanGrid, StudyConfig,
};
pub use lsmc::{lsmc_value, trinomial_path, LsmcConfig};
pub use result::StoppingResult;
pub use sweep::{eps_sweep, nonincreasing_within, SweepPoint, SweepStrategy};
