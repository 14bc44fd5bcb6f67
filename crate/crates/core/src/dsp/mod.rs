//! Numerical building blocks shared by the feature extractors.

pub mod butter;
pub mod spectrum;
pub mod stats;

pub use butter::{FilterSpec, Sos};
pub use spectrum::Spectrum;
