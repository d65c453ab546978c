//! Discretized occupation measures and the utilities built on them.

mod clock;
mod grid;
mod measure;
mod path;
mod permutation;

pub use clock::Clock;
pub use grid::{make_grid, CorridorGrid};
pub use measure::{DiscreteOccupation, LocalTimeQuery, MetricOrder, OccupationIntegrand};
pub use path::{occupation_from_path, SampledPath};
pub use permutation::{shuffle_path, TimePermutation};
