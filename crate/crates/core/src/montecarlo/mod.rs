//! Monte Carlo network simulation.

mod campaign;
mod realization;
mod trial;

pub use campaign::*;
pub use realization::*;
pub use trial::*;
