//! Toy style-based generator, its fixed latent encoder and MMD pretraining.

mod encoder;
mod network;
mod pretrain;

pub use encoder::LatentEncoder;
pub use network::{names, GeneratorArch, StyleCodes, StyleGenerator};
pub use pretrain::{pretrain_generator, PretrainConfig, PretrainedGenerator, MIN_SOURCE_SAMPLES};
