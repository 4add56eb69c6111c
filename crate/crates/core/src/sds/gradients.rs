//! Gradient seeds injected at the generated latent. None of these are
//! differentiated through the critic.

use super::config::Weighting;
use crate::diffusion::{tweedie_z0, NoiseSchedule};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Score norms below this are treated as degenerate.
pub const MIN_SCORE_NORM: f64 = 1e-12;

fn check_rows(op: &'static str, a: &Tensor, b: &Tensor, t: Option<&[usize]>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, a.shape(), b.shape()));
    }
    if let Some(t) = t {
        if t.len() != a.rows() {
            return Err(Error::shape(op, a.shape(), &[t.len()]));
        }
    }
    Ok(())
}

pub fn timestep_weight(t: usize, sched: &NoiseSchedule, weighting: Weighting) -> Result<f64> {
    let ab = sched.alpha_bar(t)?;
    Ok(match weighting {
        Weighting::OneMinusAlphaBar => 1.0 - ab,
        Weighting::Constant1 => 1.0,
    })
}

/// `w_t · (ε̂ − ε)`, one timestep per row.
pub fn sds_gradient(
    eps_hat: &Tensor,
    eps: &Tensor,
    t: &[usize],
    sched: &NoiseSchedule,
    weighting: Weighting,
) -> Result<Tensor> {
    check_rows("sds_gradient", eps_hat, eps, Some(t))?;
    let c = eps.cols();
    let w = t
        .iter()
        .map(|&ti| timestep_weight(ti, sched, weighting))
        .collect::<Result<Vec<_>>>()?;
    let data = eps_hat
        .data()
        .iter()
        .zip(eps.data())
        .enumerate()
        .map(|(k, (&h, &e))| w[k / c] * (h - e))
        .collect();
    Tensor::new(eps.shape().to_vec(), data)
}

/// `r · (a/|a| − b/|b|)` per row, with `r = √d`.
fn normalized_difference(op: &str, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let c = a.cols();
    let r = (c as f64).sqrt();
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.rows() {
        let (ra, rb) = (a.row(i), b.row(i));
        let na = ra.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = rb.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na < MIN_SCORE_NORM || nb < MIN_SCORE_NORM {
            return Err(Error::Degenerate(format!(
                "{op}: row {i} has operand norms {na:e} and {nb:e}"
            )));
        }
        out.extend(ra.iter().zip(rb).map(|(x, y)| r * (x / na - y / nb)));
    }
    Tensor::new(a.shape().to_vec(), out)
}

/// Directional regularizer seed `r(ε̂_train/|ε̂_train| − ε̂_frozen/|ε̂_frozen|)`.
pub fn directional_gradient(eps_train: &Tensor, eps_frozen: &Tensor) -> Result<Tensor> {
    check_rows("directional_gradient", eps_train, eps_frozen, None)?;
    normalized_difference("directional_gradient", eps_train, eps_frozen)
}

/// Magnitude `2√(1−ᾱ_t)/√ᾱ_t` linking `∇_ε̂ L_rec` to the Tweedie residual.
pub fn reconstruction_coefficient(t: usize, sched: &NoiseSchedule) -> Result<f64> {
    let ab = sched.alpha_bar(t)?;
    Ok(2.0 * (1.0 - ab).sqrt() / ab.sqrt())
}

/// `∇_ε̂ |ẑ0 − z0_frozen|²` where `ẑ0` is the Tweedie estimate from `(z_t, ε̂)`.
pub fn reconstruction_loss_grad(
    eps_train: &Tensor,
    z_t_train: &Tensor,
    z0_frozen: &Tensor,
    t: &[usize],
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    check_rows("reconstruction_gradient", eps_train, z_t_train, Some(t))?;
    check_rows("reconstruction_gradient", eps_train, z0_frozen, None)?;
    let z0_hat = tweedie_z0(z_t_train, eps_train, t, sched)?;
    let c = eps_train.cols();
    let coeff = t
        .iter()
        .map(|&ti| reconstruction_coefficient(ti, sched))
        .collect::<Result<Vec<_>>>()?;
    let data = z0_hat
        .data()
        .iter()
        .zip(z0_frozen.data())
        .enumerate()
        .map(|(k, (&h, &f))| -coeff[k / c] * (h - f))
        .collect();
    Tensor::new(eps_train.shape().to_vec(), data)
}

/// Reconstruction regularizer seed `r(ε̂_train/|ε̂_train| − ∇L_rec/|∇L_rec|)`.
pub fn reconstruction_gradient(
    eps_train: &Tensor,
    z_t_train: &Tensor,
    z0_frozen: &Tensor,
    t: &[usize],
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    let grad = reconstruction_loss_grad(eps_train, z_t_train, z0_frozen, t, sched)?;
    normalized_difference("reconstruction_gradient", eps_train, &grad)
}
