use super::config::{sample_timestep, SdsConfig};
use super::gradients::sds_gradient;
use crate::diffusion::{cfg_score, q_sample, EpsModel, NoiseSchedule};
use crate::error::{Error, Result};
use crate::generator::{LatentEncoder, StyleGenerator};
use crate::numerics::{Rng, Tape, Tensor};
use crate::optim::Adam;
use crate::params::Params;

/// Style codes optimized per probe.
pub const PROBE_BATCH: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerRanking {
    /// Layer indices, most-changed first; equal magnitudes keep the shallower layer first.
    pub order: Vec<usize>,
    /// Mean code displacement, indexed by layer.
    pub magnitudes: Vec<f64>,
}

impl LayerRanking {
    pub fn top(&self, k: usize) -> Vec<usize> {
        self.order.iter().take(k).copied().collect()
    }
}

fn code_name(l: usize) -> String {
    format!("code.{l}")
}

/// Rank synthesis layers by how far their W+ codes move under the SDS
/// objective with every network parameter frozen.
pub fn rank_layers<M: EpsModel + ?Sized>(
    gen: &StyleGenerator,
    critic: &M,
    encoder: &LatentEncoder,
    sched: &NoiseSchedule,
    cfg: &SdsConfig,
    rng: &mut Rng,
) -> Result<LayerRanking> {
    let arch = gen.arch();
    let z = rng.normal_tensor(&[PROBE_BATCH, arch.latent_dim]);
    let init = gen.map_latent(&z)?;
    let mut codes = Params::new();
    for (l, slot) in init.slots.iter().enumerate() {
        codes.insert(code_name(l), slot.clone());
    }
    let mut adam = Adam::new(cfg.lr);
    let d = arch.out_dim;
    for _ in 0..cfg.probe_iters {
        let mut t = Vec::with_capacity(PROBE_BATCH);
        let mut eps = Vec::with_capacity(PROBE_BATCH * d);
        for _ in 0..PROBE_BATCH {
            t.push(sample_timestep(rng, cfg)?);
            eps.extend(rng.normals(d));
        }
        let eps = Tensor::matrix(PROBE_BATCH, d, eps)?;

        let mut tape = Tape::new();
        let net = gen.params().bind(&mut tape, |_| false)?;
        let cb = codes.bind(&mut tape, |_| true)?;
        let vars = (0..arch.layers).map(|l| cb.get(&code_name(l))).collect::<Result<Vec<_>>>()?;
        let x = gen.synthesize_on(&mut tape, &net, &vars)?;
        let z0 = encoder.encode_on(&mut tape, x)?;
        let z_t = q_sample(tape.value(z0), &t, &eps, sched)?;
        let eps_hat = cfg_score(critic, &z_t, &t, cfg.target, cfg.s)?;
        let g = sds_gradient(&eps_hat, &eps, &t, sched, cfg.weighting)?;
        tape.backward(z0, &g.map(|v| v / PROBE_BATCH as f64))?;
        adam.step(&mut codes, &cb.grads(&tape))?;
    }
    let magnitudes = (0..arch.layers)
        .map(|l| {
            let now = codes.get(&code_name(l))?;
            let before = &init.slots[l];
            let total: f64 = (0..PROBE_BATCH)
                .map(|b| {
                    now.row(b)
                        .iter()
                        .zip(before.row(b))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum();
            Ok(total / PROBE_BATCH as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..arch.layers).collect();
    order.sort_by(|&a, &b| magnitudes[b].total_cmp(&magnitudes[a]).then(a.cmp(&b)));
    Ok(LayerRanking { order, magnitudes })
}

/// The `cfg.k` most-changed layers, in rank order.
pub fn select_layers<M: EpsModel + ?Sized>(
    gen: &StyleGenerator,
    critic: &M,
    encoder: &LatentEncoder,
    sched: &NoiseSchedule,
    cfg: &SdsConfig,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if cfg.k == 0 || cfg.k > gen.arch().layers {
        return Err(Error::Config(format!(
            "sds.k: must lie in 1..={}, got {}",
            gen.arch().layers,
            cfg.k
        )));
    }
    Ok(rank_layers(gen, critic, encoder, sched, cfg, rng)?.top(cfg.k))
}
