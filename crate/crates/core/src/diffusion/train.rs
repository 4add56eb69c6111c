use super::denoiser::{Condition, Denoiser, DenoiserArch};
use super::process::q_sample;
use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tape, Tensor, Var};
use crate::optim::Adam;
use crate::params::Bindings;

/// Labeled latent samples; rows of `x` pair with `labels`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSamples {
    pub x: Tensor,
    pub labels: Vec<usize>,
}

impl LabeledSamples {
    pub fn new(x: Tensor, labels: Vec<usize>) -> Result<Self> {
        if x.ndim() != 2 || x.rows() != labels.len() {
            return Err(Error::shape("labeled samples", x.shape(), &[labels.len()]));
        }
        Ok(Self { x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserTrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    /// Probability of replacing a sample's condition with the null token.
    pub p_uncond: f64,
    pub seed: u64,
}

impl Default for DenoiserTrainConfig {
    fn default() -> Self {
        Self {
            steps: 20_000,
            batch: 128,
            lr: 1e-3,
            p_uncond: 0.1,
            seed: 0,
        }
    }
}

impl DenoiserTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p_uncond) {
            return Err(Error::Config(format!("p_uncond must lie in [0, 1), got {}", self.p_uncond)));
        }
        if self.batch == 0 {
            return Err(Error::Config("denoiser batch must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("denoiser lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Random quantities of one loss evaluation, drawn per sample in order:
/// timestep, then `d` normals, then the condition-drop uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct LossDraws {
    pub t: Vec<usize>,
    pub eps: Tensor,
    pub cond: Vec<Condition>,
}

impl LossDraws {
    pub fn sample(
        rng: &mut Rng,
        cond: &[Condition],
        latent_dim: usize,
        sched: &NoiseSchedule,
        p_uncond: f64,
    ) -> Self {
        let mut t = Vec::with_capacity(cond.len());
        let mut eps = Vec::with_capacity(cond.len() * latent_dim);
        let mut dropped = Vec::with_capacity(cond.len());
        for &c in cond {
            t.push(rng.uniform_int(1, sched.steps()));
            eps.extend(rng.normals(latent_dim));
            let u = rng.uniform();
            dropped.push(if u < p_uncond { Condition::Null } else { c });
        }
        Self {
            t,
            eps: Tensor::matrix(cond.len(), latent_dim, eps).expect("draw shape"),
            cond: dropped,
        }
    }
}

/// Batch mean of `|ε_θ(z_t | c, t) − ε|²` with training weight 1, recorded on `tape`.
pub fn denoiser_loss_on(
    tape: &mut Tape,
    den: &Denoiser,
    bind: &Bindings,
    z0: &Tensor,
    draws: &LossDraws,
    sched: &NoiseSchedule,
) -> Result<Var> {
    if z0.rows() == 0 {
        return Err(Error::Usage("denoiser loss on an empty batch".into()));
    }
    let z_t = q_sample(z0, &draws.t, &draws.eps, sched)?;
    let z_t = tape.constant(z_t)?;
    let pred = den.forward(tape, bind, z_t, &draws.t, &draws.cond)?;
    let eps = tape.constant(draws.eps.clone())?;
    let diff = tape.sub(pred, eps)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    tape.scale(total, 1.0 / z0.rows() as f64)
}

/// Draw a fresh set of noise/timesteps/drops from `rng` and evaluate the loss.
pub fn denoiser_loss(
    den: &Denoiser,
    z0: &Tensor,
    cond: &[Condition],
    sched: &NoiseSchedule,
    rng: &mut Rng,
    p_uncond: f64,
) -> Result<f64> {
    let draws = LossDraws::sample(rng, cond, den.arch().latent_dim, sched, p_uncond);
    let mut tape = Tape::new();
    let bind = den.params().bind(&mut tape, |_| false)?;
    let loss = denoiser_loss_on(&mut tape, den, &bind, z0, &draws, sched)?;
    Ok(tape.value(loss).item())
}

#[derive(Clone, Debug)]
pub struct TrainedDenoiser {
    pub denoiser: Denoiser,
    /// Loss of every optimization step, in order.
    pub losses: Vec<f64>,
}

/// Adam training with condition dropping; deterministic given `cfg.seed`.
pub fn train_denoiser(
    data: &LabeledSamples,
    arch: DenoiserArch,
    cfg: &DenoiserTrainConfig,
    sched: &NoiseSchedule,
) -> Result<TrainedDenoiser> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("denoiser dataset is empty".into()));
    }
    if data.class_count() < 2 {
        return Err(Error::Config(
            "denoiser dataset needs at least two classes for guidance contrast".into(),
        ));
    }
    if data.x.cols() != arch.latent_dim {
        return Err(Error::shape("denoiser dataset", data.x.shape(), &[arch.latent_dim]));
    }
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= arch.classes) {
        return Err(Error::Config(format!("label {bad} outside 0..{}", arch.classes)));
    }
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut den = Denoiser::new(arch, &mut rng)?;
    let mut adam = Adam::new(cfg.lr);
    let d = data.x.cols();
    let mut losses = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let mut rows = Vec::with_capacity(cfg.batch * d);
        let mut cond = Vec::with_capacity(cfg.batch);
        for _ in 0..cfg.batch {
            let i = rng.uniform_int(0, data.len() - 1);
            rows.extend_from_slice(data.x.row(i));
            cond.push(Condition::Class(data.labels[i]));
        }
        let z0 = Tensor::matrix(cfg.batch, d, rows)?;
        let draws = LossDraws::sample(&mut rng, &cond, d, sched, cfg.p_uncond);
        let mut tape = Tape::new();
        let bind = den.params().bind(&mut tape, |_| true)?;
        let loss = denoiser_loss_on(&mut tape, &den, &bind, &z0, &draws, sched)?;
        losses.push(tape.value(loss).item());
        tape.backward(loss, &Tensor::scalar(1.0))?;
        adam.step(den.params_mut(), &bind.grads(&tape))?;
    }
    Ok(TrainedDenoiser {
        denoiser: den,
        losses,
    })
}
