pub mod analysis;
pub mod dynamics;
pub mod geometry;
pub mod harness;
pub mod spectral;
pub mod stepping;
pub mod validation;
