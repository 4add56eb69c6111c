use super::config::SdsConfig;
use super::step::{Adaptation, StepStats};
use crate::diffusion::{Condition, EpsModel, NoiseSchedule};
use crate::error::{Error, Result};
use crate::generator::{LatentEncoder, StyleGenerator};
use crate::metrics::{
    condition_score, frechet_gaussian_distance, pairwise_diversity, ConditionClassifier, SampleSet,
};
use crate::numerics::{Rng, Tensor};

/// Fixed references and latents used to score a generator during adaptation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub source: SampleSet,
    pub target: SampleSet,
    pub classifier: ConditionClassifier,
    pub target_class: Condition,
    /// Latents pushed through the generator at every evaluation.
    pub latents: Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub fd_source: f64,
    pub fd_target: f64,
    pub diversity: f64,
    pub cond_score: f64,
}

impl Evaluator {
    pub fn samples(&self, gen: &StyleGenerator) -> Result<Tensor> {
        gen.sample(&self.latents)
    }

    pub fn evaluate(&self, gen: &StyleGenerator) -> Result<Metrics> {
        let set = SampleSet::new(self.samples(gen)?, "generated")?;
        Ok(Metrics {
            fd_source: frechet_gaussian_distance(&set, &self.source)?.value,
            fd_target: frechet_gaussian_distance(&set, &self.target)?.value,
            diversity: pairwise_diversity(&set)?,
            cond_score: condition_score(&set, &self.classifier, self.target_class)?,
        })
    }
}

/// One evaluation row; gradient norms average the steps since the previous row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRow {
    pub iteration: usize,
    pub metrics: Metrics,
    pub g_sds: f64,
    pub g_dir: f64,
    pub g_rec: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdaptationReport {
    pub layers: Vec<usize>,
    pub rows: Vec<EvalRow>,
    /// Statistics of every optimizer step, in order.
    pub steps: Vec<StepStats>,
}

impl AdaptationReport {
    pub fn first(&self) -> Option<&EvalRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&EvalRow> {
        self.rows.last()
    }
}

#[derive(Clone, Debug)]
pub struct AdaptOutcome {
    pub generator: StyleGenerator,
    pub report: AdaptationReport,
    /// Evaluation-latent samples at the requested iterations.
    pub snapshots: Vec<(usize, Tensor)>,
}

fn mean_stats(steps: &[StepStats]) -> (f64, f64, f64) {
    if steps.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = steps.len() as f64;
    (
        steps.iter().map(|s| s.g_sds).sum::<f64>() / n,
        steps.iter().map(|s| s.g_dir).sum::<f64>() / n,
        steps.iter().map(|s| s.g_rec).sum::<f64>() / n,
    )
}

/// Run `cfg.iters` adaptation steps seeded by `cfg.seed`, evaluating at
/// iteration 0, every `cfg.eval_every` iterations and at the end.
#[allow(clippy::too_many_arguments)]
pub fn adapt<M: EpsModel + ?Sized>(
    gen: &StyleGenerator,
    critic: &M,
    encoder: &LatentEncoder,
    sched: &NoiseSchedule,
    cfg: &SdsConfig,
    layers: &[usize],
    eval: &Evaluator,
    snapshot_at: &[usize],
) -> Result<AdaptOutcome> {
    cfg.validate(sched.steps(), gen.arch().layers)?;
    let mut run = Adaptation::new(gen, critic, encoder, sched, cfg, layers)?;
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut report = AdaptationReport {
        layers: layers.to_vec(),
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let mut since = 0;
    for i in 0..=cfg.iters {
        if snapshot_at.contains(&i) {
            snapshots.push((i, eval.samples(run.generator())?));
        }
        if i % cfg.eval_every == 0 || i == cfg.iters {
            let (g_sds, g_dir, g_rec) = mean_stats(&report.steps[since..]);
            since = report.steps.len();
            report.rows.push(EvalRow {
                iteration: i,
                metrics: eval.evaluate(run.generator())?,
                g_sds,
                g_dir,
                g_rec,
            });
            log::debug!("iteration {i}: {:?}", report.rows.last().map(|r| r.metrics));
        }
        if i == cfg.iters {
            break;
        }
        let stats = run.step(&mut rng).map_err(|e| match e {
            Error::NonFinite(what) => Error::NonFinite(format!("{what} at adaptation iteration {}", i + 1)),
            other => other,
        })?;
        if !run.generator().params().all_finite() {
            return Err(Error::NonFinite(format!(
                "generator parameters at adaptation iteration {}",
                i + 1
            )));
        }
        report.steps.push(stats);
    }
    Ok(AdaptOutcome {
        generator: run.into_generator(),
        report,
        snapshots,
    })
}
