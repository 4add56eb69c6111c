//! Experiment stages. Every stage draws from its own stream derived from the
//! master seed, so stages can be rerun independently with identical results.

use super::config::{EncoderMode, ExperimentConfig};
use super::data::labeled_dataset;
use crate::diffusion::{train_denoiser, Condition, Denoiser, LabeledSamples, TrainedDenoiser};
use crate::error::Result;
use crate::generator::{pretrain_generator, LatentEncoder, PretrainedGenerator, StyleGenerator};
use crate::metrics::{ConditionClassifier, SampleSet};
use crate::numerics::{Rng, Tensor};
use crate::sds::{adapt, rank_layers, AdaptOutcome, Evaluator, LayerRanking};

pub mod stage {
    pub const DATA: u64 = 1;
    pub const DENOISER: u64 = 2;
    pub const GENERATOR: u64 = 3;
    pub const CLASSIFIER_DATA: u64 = 4;
    pub const CLASSIFIER: u64 = 5;
    pub const ENCODER: u64 = 6;
    pub const SELECT: u64 = 7;
    pub const ADAPT: u64 = 8;
    pub const EVAL_LATENTS: u64 = 9;
    pub const REFERENCE: u64 = 10;
}

pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    Rng::derive(seed, stage).next_u64()
}

pub fn build_encoder(cfg: &ExperimentConfig) -> LatentEncoder {
    match cfg.encoder {
        EncoderMode::Identity => LatentEncoder::Identity,
        EncoderMode::Orthogonal => {
            LatentEncoder::fixed_orthogonal(2, &mut Rng::derive(cfg.seed, stage::ENCODER))
        }
    }
}

/// Labeled training samples in data space.
pub fn training_data(cfg: &ExperimentConfig) -> Result<LabeledSamples> {
    labeled_dataset(&cfg.classes, cfg.samples_per_class, &mut Rng::derive(cfg.seed, stage::DATA))
}

pub fn source_samples(cfg: &ExperimentConfig) -> Result<Tensor> {
    let data = training_data(cfg)?;
    let rows: Vec<f64> = (0..data.len())
        .filter(|&i| data.labels[i] == cfg.source_class)
        .flat_map(|i| data.x.row(i).to_vec())
        .collect();
    Tensor::matrix(rows.len() / 2, 2, rows)
}

/// Denoiser trained on encoded samples of every class.
pub fn denoiser_stage(cfg: &ExperimentConfig) -> Result<TrainedDenoiser> {
    let data = training_data(cfg)?;
    let encoded = LabeledSamples::new(build_encoder(cfg).encode(&data.x)?, data.labels)?;
    let mut tc = cfg.denoiser.clone();
    tc.seed = stage_seed(cfg.seed, stage::DENOISER);
    train_denoiser(&encoded, cfg.denoiser_arch(), &tc, &cfg.schedule()?)
}

pub fn generator_stage(cfg: &ExperimentConfig) -> Result<PretrainedGenerator> {
    let mut pc = cfg.pretrain.clone();
    pc.seed = stage_seed(cfg.seed, stage::GENERATOR);
    let mut arch = cfg.generator.clone();
    arch.out_dim = 2;
    pretrain_generator(&source_samples(cfg)?, arch, &pc)
}

/// Classifier trained on a held-out draw of the class distributions.
pub fn classifier_stage(cfg: &ExperimentConfig) -> Result<ConditionClassifier> {
    let held = labeled_dataset(
        &cfg.classes,
        cfg.samples_per_class,
        &mut Rng::derive(cfg.seed, stage::CLASSIFIER_DATA),
    )?;
    let mut cc = cfg.classifier.clone();
    cc.seed = stage_seed(cfg.seed, stage::CLASSIFIER);
    ConditionClassifier::train(&held, cfg.classes.len(), &cc)
}

/// Fresh reference draws of the source and target classes.
pub fn reference_sets(cfg: &ExperimentConfig) -> Result<(SampleSet, SampleSet)> {
    let mut rng = Rng::derive(cfg.seed, stage::REFERENCE);
    let n = cfg.reference_samples;
    let source = cfg.classes[cfg.source_class].sample(n, &mut rng);
    let target = cfg.classes[cfg.target_class()].sample(n, &mut rng);
    Ok((SampleSet::new(source, "source")?, SampleSet::new(target, "target")?))
}

pub fn evaluation_latents(cfg: &ExperimentConfig) -> Tensor {
    Rng::derive(cfg.seed, stage::EVAL_LATENTS).normal_tensor(&[cfg.sds.eval_samples, cfg.generator.latent_dim])
}

pub fn evaluator(cfg: &ExperimentConfig, classifier: ConditionClassifier) -> Result<Evaluator> {
    let (source, target) = reference_sets(cfg)?;
    Ok(Evaluator {
        source,
        target,
        classifier,
        target_class: Condition::Class(cfg.target_class()),
        latents: evaluation_latents(cfg),
    })
}

pub fn selection_stage(cfg: &ExperimentConfig, gen: &StyleGenerator, den: &Denoiser) -> Result<LayerRanking> {
    cfg.sds.validate(cfg.schedule_steps, gen.arch().layers)?;
    let mut rng = Rng::derive(cfg.seed, stage::SELECT);
    rank_layers(gen, den, &build_encoder(cfg), &cfg.schedule()?, &cfg.sds, &mut rng)
}

/// Rank layers, then adapt the top `sds.k` of them.
pub fn adaptation_stage(
    cfg: &ExperimentConfig,
    gen: &StyleGenerator,
    den: &Denoiser,
    eval: &Evaluator,
    snapshot_at: &[usize],
) -> Result<(LayerRanking, AdaptOutcome)> {
    let ranking = selection_stage(cfg, gen, den)?;
    let mut sc = cfg.sds.clone();
    sc.seed = stage_seed(cfg.seed, stage::ADAPT);
    let layers = ranking.top(sc.k);
    let out = adapt(gen, den, &build_encoder(cfg), &cfg.schedule()?, &sc, &layers, eval, snapshot_at)?;
    Ok((ranking, out))
}

/// Iterations at 0%, 25%, 50% and 100% of the run, deduplicated.
pub fn snapshot_iterations(iters: usize) -> Vec<usize> {
    let mut v = vec![0, iters / 4, iters / 2, iters];
    v.dedup();
    v
}
