use super::denoiser::{Condition, EpsModel};
use super::process::cfg_score;
use super::schedule::NoiseSchedule;
use crate::error::Result;
use crate::numerics::{Rng, Tensor};

/// DDPM ancestral sampling from `t = T` down to 1 with guided predictions.
///
/// Uses `σ_t² = β_t` and adds no noise on the final step.
pub fn ancestral_sample<M: EpsModel + ?Sized>(
    model: &M,
    c: Condition,
    s: f64,
    sched: &NoiseSchedule,
    rng: &mut Rng,
    n: usize,
) -> Result<Tensor> {
    let d = model.latent_dim();
    if n == 0 {
        return Ok(Tensor::zeros(&[0, d]));
    }
    let mut x = rng.normal_tensor(&[n, d]);
    for t in (1..=sched.steps()).rev() {
        let ts = vec![t; n];
        let eps = cfg_score(model, &x, &ts, c, s)?;
        let beta = sched.beta(t)?;
        let coef = beta / (1.0 - sched.alpha_bar(t)?).sqrt();
        let inv_sqrt_alpha = 1.0 / sched.alpha(t)?.sqrt();
        let mut next = x.zip_with(&eps, |xv, ev| inv_sqrt_alpha * (xv - coef * ev))?;
        if t > 1 {
            let sigma = beta.sqrt();
            for v in next.data_mut() {
                *v += sigma * rng.normal();
            }
        }
        x = next;
    }
    Ok(x)
}
