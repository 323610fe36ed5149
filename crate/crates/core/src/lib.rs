pub mod deviation_bounds;
pub mod error;
pub mod finite_prob;
pub mod integral_geometry;
pub mod monte_carlo;
pub mod phase_transition;
pub mod shape;
pub mod special_math;

pub use error::{Error, Result};
pub use shape::BlockShape;
