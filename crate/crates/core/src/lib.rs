//! Simulation and numerics for Beta(2-α, α) coalescents.

pub mod engine;
pub mod limits;
pub mod error;
pub mod frequencies;
pub mod montecarlo;
pub mod quad;
pub mod rates;
pub mod scalar;
pub mod slack;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision characteristic measure.
pub type Measure = rates::CharacteristicMeasure<f64>;
/// Single-precision characteristic measure.
pub type Measure32 = rates::CharacteristicMeasure<f32>;
