//! Diffusion-guided domain adaptation of toy style-based generators.
//!
//! A conditional ε-prediction denoiser acts as a frozen critic. Score
//! distillation gradients, optionally regularized by directional and
//! reconstruction terms, are injected at the generator's encoded output and
//! backpropagated into selected synthesis layers.

pub mod checkpoint;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod metrics;
pub mod numerics;
pub mod optim;
pub mod params;
pub mod sds;

pub use error::{Error, Result};
