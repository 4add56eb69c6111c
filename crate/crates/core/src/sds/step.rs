use std::collections::BTreeSet;

use super::config::{sample_timestep, SdsConfig};
use super::gradients::{directional_gradient, reconstruction_gradient, sds_gradient};
use crate::diffusion::{cfg_score, q_sample, EpsModel, NoiseSchedule};
use crate::error::{Error, Result};
use crate::generator::{names, LatentEncoder, StyleGenerator};
use crate::numerics::{Rng, Tape, Tensor};
use crate::optim::Adam;
use crate::params::Grads;

/// Random quantities of one iteration. Drawn in order: latents, then per row
/// `(t, ε)` for the trainable branch, then per row for the frozen branch
/// unless noise is shared.
#[derive(Clone, Debug, PartialEq)]
pub struct StepNoise {
    pub z: Tensor,
    pub t: Vec<usize>,
    pub eps: Tensor,
    pub t_frozen: Vec<usize>,
    pub eps_frozen: Tensor,
}

impl StepNoise {
    pub fn draw(rng: &mut Rng, cfg: &SdsConfig, latent_dim: usize, d: usize) -> Result<Self> {
        let b = cfg.batch;
        let z = rng.normal_tensor(&[b, latent_dim]);
        let branch = |rng: &mut Rng| -> Result<(Vec<usize>, Tensor)> {
            let mut t = Vec::with_capacity(b);
            let mut eps = Vec::with_capacity(b * d);
            for _ in 0..b {
                t.push(sample_timestep(rng, cfg)?);
                eps.extend(rng.normals(d));
            }
            Ok((t, Tensor::matrix(b, d, eps)?))
        };
        let (t, eps) = branch(rng)?;
        let (t_frozen, eps_frozen) = if cfg.share_noise {
            (t.clone(), eps.clone())
        } else {
            branch(rng)?
        };
        Ok(Self {
            z,
            t,
            eps,
            t_frozen,
            eps_frozen,
        })
    }
}

/// Mean per-sample norms of the unweighted seed components.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub g_sds: f64,
    pub g_dir: f64,
    pub g_rec: f64,
    pub dir_skipped: usize,
    pub rec_skipped: usize,
}

/// Total gradient seed at the trainable latent plus the scores behind it.
#[derive(Clone, Debug)]
pub struct Seed {
    pub g: Tensor,
    pub eps_hat: Tensor,
    pub eps_hat_frozen: Option<Tensor>,
    pub stats: StepStats,
}

fn row_of(t: &Tensor, i: usize) -> Tensor {
    Tensor::matrix(1, t.cols(), t.row(i).to_vec()).expect("row")
}

fn row_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Add `lambda · f(i)` into row `i` of `g` for every row where `f` succeeds.
/// Returns the mean norm over accepted rows and the number of skipped rows.
fn accumulate(
    g: &mut Tensor,
    lambda: f64,
    what: &str,
    mut f: impl FnMut(usize) -> Result<Tensor>,
) -> Result<(f64, usize)> {
    let c = g.cols();
    let (mut total, mut used, mut skipped) = (0.0, 0usize, 0usize);
    for i in 0..g.rows() {
        match f(i) {
            Ok(part) => {
                total += row_norm(part.data());
                used += 1;
                for (dst, src) in g.data_mut()[i * c..(i + 1) * c].iter_mut().zip(part.data()) {
                    *dst += lambda * src;
                }
            }
            Err(Error::Degenerate(msg)) => {
                log::debug!("skipping {what} regularizer for sample {i}: {msg}");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((if used > 0 { total / used as f64 } else { 0.0 }, skipped))
}

/// One adaptation run: the trainable generator, its frozen reference and the
/// optimizer state. The critic, encoder and schedule are borrowed read-only.
pub struct Adaptation<'a, M: EpsModel + ?Sized> {
    cfg: SdsConfig,
    gen: StyleGenerator,
    frozen: StyleGenerator,
    encoder: &'a LatentEncoder,
    critic: &'a M,
    sched: &'a NoiseSchedule,
    layers: Vec<usize>,
    trainable: BTreeSet<String>,
    adam: Adam,
    iteration: usize,
}

impl<'a, M: EpsModel + ?Sized> Adaptation<'a, M> {
    /// Only the weights of `layers` are trained; everything else stays frozen.
    pub fn new(
        gen: &StyleGenerator,
        critic: &'a M,
        encoder: &'a LatentEncoder,
        sched: &'a NoiseSchedule,
        cfg: &SdsConfig,
        layers: &[usize],
    ) -> Result<Self> {
        let l = gen.arch().layers;
        if layers.is_empty() {
            return Err(Error::Config("no synthesis layers selected for adaptation".into()));
        }
        let mut seen = BTreeSet::new();
        for &i in layers {
            if i >= l || !seen.insert(i) {
                return Err(Error::Config(format!("invalid layer selection {layers:?} for {l} layers")));
            }
        }
        if critic.latent_dim() != gen.arch().out_dim {
            return Err(Error::shape(
                "critic latent",
                &[critic.latent_dim()],
                &[gen.arch().out_dim],
            ));
        }
        Ok(Self {
            cfg: cfg.clone(),
            gen: gen.clone(),
            frozen: gen.snapshot_frozen(),
            encoder,
            critic,
            sched,
            layers: layers.to_vec(),
            trainable: layers.iter().map(|&i| names::weight(i)).collect(),
            adam: Adam::new(cfg.lr),
            iteration: 0,
        })
    }

    pub fn generator(&self) -> &StyleGenerator {
        &self.gen
    }

    pub fn frozen(&self) -> &StyleGenerator {
        &self.frozen
    }

    pub fn into_generator(self) -> StyleGenerator {
        self.gen
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_trainable(&self, name: &str) -> bool {
        self.trainable.contains(name)
    }

    pub fn draw_noise(&self, rng: &mut Rng) -> Result<StepNoise> {
        StepNoise::draw(rng, &self.cfg, self.gen.arch().latent_dim, self.gen.arch().out_dim)
    }

    /// Combined seed `sds + λ_dir·dir + λ_rec·rec`; the critic is only evaluated.
    pub fn seed(&self, noise: &StepNoise) -> Result<Seed> {
        let cfg = &self.cfg;
        let z0 = self.encoder.encode(&self.gen.sample(&noise.z)?)?;
        let z_t = q_sample(&z0, &noise.t, &noise.eps, self.sched)?;
        let eps_hat = cfg_score(self.critic, &z_t, &noise.t, cfg.target, cfg.s)?;
        let sds = sds_gradient(&eps_hat, &noise.eps, &noise.t, self.sched, cfg.weighting)?;
        let mut stats = StepStats {
            g_sds: (0..sds.rows()).map(|i| row_norm(sds.row(i))).sum::<f64>() / sds.rows() as f64,
            ..Default::default()
        };
        let mut g = sds;
        let mut eps_hat_frozen = None;
        if cfg.lambda_dir > 0.0 || cfg.lambda_rec > 0.0 {
            let z0_frozen = self.encoder.encode(&self.frozen.sample(&noise.z)?)?;
            if cfg.lambda_dir > 0.0 {
                let z_t_f = q_sample(&z0_frozen, &noise.t_frozen, &noise.eps_frozen, self.sched)?;
                let eps_f = cfg_score(self.critic, &z_t_f, &noise.t_frozen, cfg.target, cfg.s)?;
                let (n, skipped) = accumulate(&mut g, cfg.lambda_dir, "directional", |i| {
                    directional_gradient(&row_of(&eps_hat, i), &row_of(&eps_f, i))
                })?;
                stats.g_dir = n;
                stats.dir_skipped = skipped;
                eps_hat_frozen = Some(eps_f);
            }
            if cfg.lambda_rec > 0.0 {
                let (n, skipped) = accumulate(&mut g, cfg.lambda_rec, "reconstruction", |i| {
                    reconstruction_gradient(
                        &row_of(&eps_hat, i),
                        &row_of(&z_t, i),
                        &row_of(&z0_frozen, i),
                        &noise.t[i..i + 1],
                        self.sched,
                    )
                })?;
                stats.g_rec = n;
                stats.rec_skipped = skipped;
            }
        }
        Ok(Seed {
            g,
            eps_hat,
            eps_hat_frozen,
            stats,
        })
    }

    /// Parameter gradients from injecting `g / B` at the encoded output.
    pub fn seed_grads(&self, z: &Tensor, g: &Tensor) -> Result<Grads> {
        let mut tape = Tape::new();
        let bind = self.gen.params().bind(&mut tape, |n| self.trainable.contains(n))?;
        let zv = tape.constant(z.clone())?;
        let x = self.gen.forward_on(&mut tape, &bind, zv)?;
        let z0 = self.encoder.encode_on(&mut tape, x)?;
        let inv_b = 1.0 / z.rows() as f64;
        tape.backward(z0, &g.map(|v| v * inv_b))?;
        Ok(bind.grads(&tape))
    }

    /// Same gradients via the surrogate scalar `Σ stopgrad(g)·z0 / B`.
    pub fn surrogate_grads(&self, z: &Tensor, g: &Tensor) -> Result<Grads> {
        let mut tape = Tape::new();
        let bind = self.gen.params().bind(&mut tape, |n| self.trainable.contains(n))?;
        let zv = tape.constant(z.clone())?;
        let x = self.gen.forward_on(&mut tape, &bind, zv)?;
        let z0 = self.encoder.encode_on(&mut tape, x)?;
        let gv = tape.constant(g.clone())?;
        let prod = tape.mul(z0, gv)?;
        let total = tape.sum(prod)?;
        let loss = tape.scale(total, 1.0 / z.rows() as f64)?;
        tape.backward(loss, &Tensor::scalar(1.0))?;
        Ok(bind.grads(&tape))
    }

    /// One optimizer update from pre-drawn noise.
    pub fn step_with(&mut self, noise: &StepNoise) -> Result<StepStats> {
        let seed = self.seed(noise)?;
        let grads = self.seed_grads(&noise.z, &seed.g)?;
        self.adam.step(self.gen.params_mut(), &grads)?;
        self.iteration += 1;
        Ok(seed.stats)
    }

    pub fn step(&mut self, rng: &mut Rng) -> Result<StepStats> {
        let noise = self.draw_noise(rng)?;
        self.step_with(&noise)
    }
}
