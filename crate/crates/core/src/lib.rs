//! Stochastic-geometry simulator and energy-efficiency optimizer for drone-aggregated
//! IoT traffic sharing spectrum with a TDD cellular network.
//!
//! Analytic modules are generic over [`Real`]; concrete `f64` aliases live at the crate root.

pub mod channel;
pub mod config;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod lifetime;
pub mod montecarlo;
pub mod quadrature;
pub mod report;
pub mod resources;
pub mod scalar;
pub mod scmd;
pub mod scsd;
pub mod search;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instantiations of the generic analytic types.
pub type ChannelParams = channel::ChannelParams<f64>;
pub type DerivedConstants = channel::DerivedConstants<f64>;
pub type CoverageQuery = coverage::CoverageQuery<f64>;
pub type ScSdProblem = scsd::ScSdProblem<f64>;
pub type ScMdProblem = scmd::ScMdProblem<f64>;
pub type ProtocolConfig = resources::ProtocolConfig<f64>;
pub type Densities = resources::Densities<f64>;
pub type QuadratureCfg = quadrature::QuadratureCfg<f64>;

/// Single-precision instantiations.
pub mod f32 {
    pub type ChannelParams = crate::channel::ChannelParams<f32>;
    pub type CoverageQuery = crate::coverage::CoverageQuery<f32>;
    pub type ScSdProblem = crate::scsd::ScSdProblem<f32>;
    pub type QuadratureCfg = crate::quadrature::QuadratureCfg<f32>;
}
