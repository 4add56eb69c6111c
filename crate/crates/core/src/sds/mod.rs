//! Score-distillation adaptation of a style generator against a frozen
//! guided denoiser: gradient seeds, the per-iteration update, layer
//! selection and the full adaptation loop.

mod adapt;
mod config;
mod gradients;
mod select;
mod step;

pub use adapt::{adapt, AdaptOutcome, AdaptationReport, EvalRow, Evaluator, Metrics};
pub use config::{sample_timestep, SdsConfig, Weighting};
pub use gradients::{
    directional_gradient, reconstruction_coefficient, reconstruction_gradient, reconstruction_loss_grad,
    sds_gradient, timestep_weight, MIN_SCORE_NORM,
};
pub use select::{rank_layers, select_layers, LayerRanking, PROBE_BATCH};
pub use step::{Adaptation, Seed, StepNoise, StepStats};
