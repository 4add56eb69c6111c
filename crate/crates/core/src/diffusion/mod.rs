//! Forward process, conditional denoiser, guidance and sampling: the frozen critic.

mod denoiser;
mod process;
mod sample;
mod schedule;
mod train;

pub use denoiser::{
    timestep_embedding, Condition, Denoiser, DenoiserArch, EpsModel, COND_EMBED_DIM, TIME_EMBED_DIM,
};
pub use process::{cfg_score, cfg_score_on, q_sample, q_sample_on, tweedie_z0, tweedie_z0_on};
pub use sample::ancestral_sample;
pub use schedule::NoiseSchedule;
pub use train::{
    denoiser_loss, denoiser_loss_on, train_denoiser, DenoiserTrainConfig, LabeledSamples, LossDraws,
    TrainedDenoiser,
};

pub(crate) use denoiser::init_weight;
