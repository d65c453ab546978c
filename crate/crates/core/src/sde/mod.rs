//! Path generation for Brownian baselines and occupied SDEs.

mod config;
mod engine;
mod vol;

pub use config::SimConfig;
pub use engine::{
    brownian_path, euler_occupied, log_euler_step, simulate_bm, simulate_synchronized, Ensemble,
    OccupiedPath, PathState,
};
pub use vol::{ema, ConstantVol, GuyonToyVol, LocalVolTable, VolatilityFunctional};
