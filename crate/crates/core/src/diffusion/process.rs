//! Forward noising, Tweedie clean estimate and classifier-free guidance.
//!
//! Batched tensors are `[B, d]` with one timestep per row; a single 1-D
//! latent takes a one-element timestep slice.

use super::denoiser::{Condition, Denoiser, EpsModel};
use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};
use crate::params::Bindings;

fn per_row(
    x: &Tensor,
    t: &[usize],
    sched: &NoiseSchedule,
    f: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if x.rows() != t.len() {
        return Err(Error::shape("timesteps", x.shape(), &[t.len()]));
    }
    t.iter().map(|&ti| sched.alpha_bar(ti).map(&f)).collect()
}

/// Coefficients broadcast to the shape of `x`, one value per row.
fn row_coeffs(x: &Tensor, coeffs: &[f64]) -> Tensor {
    let c = x.cols();
    let data = coeffs.iter().flat_map(|&k| std::iter::repeat_n(k, c)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("row coefficients")
}

/// `z_t = √ᾱ_t · z0 + √(1-ᾱ_t) · ε`.
pub fn q_sample(z0: &Tensor, t: &[usize], eps: &Tensor, sched: &NoiseSchedule) -> Result<Tensor> {
    if z0.shape() != eps.shape() {
        return Err(Error::shape("q_sample", z0.shape(), eps.shape()));
    }
    let a = per_row(z0, t, sched, f64::sqrt)?;
    let b = per_row(z0, t, sched, |ab| (1.0 - ab).sqrt())?;
    let c = z0.cols();
    let data = z0
        .data()
        .iter()
        .zip(eps.data())
        .enumerate()
        .map(|(k, (&z, &e))| a[k / c] * z + b[k / c] * e)
        .collect();
    Tensor::new(z0.shape().to_vec(), data)
}

/// Taped [`q_sample`], differentiable in `z0`.
pub fn q_sample_on(
    tape: &mut Tape,
    z0: Var,
    t: &[usize],
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<Var> {
    let zv = tape.value(z0).clone();
    if zv.shape() != eps.shape() {
        return Err(Error::shape("q_sample", zv.shape(), eps.shape()));
    }
    let a = row_coeffs(&zv, &per_row(&zv, t, sched, f64::sqrt)?);
    let b = per_row(&zv, t, sched, |ab| (1.0 - ab).sqrt())?;
    let noise = eps.zip_with(&row_coeffs(&zv, &b), |e, k| e * k)?;
    let a = tape.constant(a)?;
    let noise = tape.constant(noise)?;
    let scaled = tape.mul(z0, a)?;
    tape.add(scaled, noise)
}

/// `ẑ0 = (z_t - √(1-ᾱ_t) · ε̂) / √ᾱ_t`.
pub fn tweedie_z0(z_t: &Tensor, eps_hat: &Tensor, t: &[usize], sched: &NoiseSchedule) -> Result<Tensor> {
    if z_t.shape() != eps_hat.shape() {
        return Err(Error::shape("tweedie_z0", z_t.shape(), eps_hat.shape()));
    }
    let a = per_row(z_t, t, sched, f64::sqrt)?;
    let b = per_row(z_t, t, sched, |ab| (1.0 - ab).sqrt())?;
    let c = z_t.cols();
    let data = z_t
        .data()
        .iter()
        .zip(eps_hat.data())
        .enumerate()
        .map(|(k, (&z, &e))| (z - b[k / c] * e) / a[k / c])
        .collect();
    Tensor::new(z_t.shape().to_vec(), data)
}

/// Taped [`tweedie_z0`], differentiable in both `z_t` and `eps_hat`.
pub fn tweedie_z0_on(
    tape: &mut Tape,
    z_t: Var,
    eps_hat: Var,
    t: &[usize],
    sched: &NoiseSchedule,
) -> Result<Var> {
    let zv = tape.value(z_t).clone();
    let inv_a = row_coeffs(&zv, &per_row(&zv, t, sched, |ab| 1.0 / ab.sqrt())?);
    let ratio = row_coeffs(&zv, &per_row(&zv, t, sched, |ab| ((1.0 - ab) / ab).sqrt())?);
    let inv_a = tape.constant(inv_a)?;
    let ratio = tape.constant(ratio)?;
    let lhs = tape.mul(z_t, inv_a)?;
    let rhs = tape.mul(eps_hat, ratio)?;
    tape.sub(lhs, rhs)
}

/// Guided prediction `ε_∅ + s·(ε_c − ε_∅)`.
///
/// Computed in difference form so that identical conditional and
/// unconditional predictions return `ε_∅` bit-for-bit for every `s`.
pub fn cfg_score<M: EpsModel + ?Sized>(
    model: &M,
    z_t: &Tensor,
    t: &[usize],
    c: Condition,
    s: f64,
) -> Result<Tensor> {
    if c == Condition::Null {
        return Err(Error::Usage(
            "guidance needs a class condition; use s = 0 for unconditional prediction".into(),
        ));
    }
    let n = z_t.rows();
    let eps_c = model.predict_eps(z_t, t, &vec![c; n])?;
    let eps_null = model.predict_eps(z_t, t, &vec![Condition::Null; n])?;
    eps_null.zip_with(&eps_c, |u, k| u + s * (k - u))
}

/// Taped [`cfg_score`] for a [`Denoiser`], differentiable in `z_t`.
pub fn cfg_score_on(
    tape: &mut Tape,
    den: &Denoiser,
    bind: &Bindings,
    z_t: Var,
    t: &[usize],
    c: Condition,
    s: f64,
) -> Result<Var> {
    if c == Condition::Null {
        return Err(Error::Usage(
            "guidance needs a class condition; use s = 0 for unconditional prediction".into(),
        ));
    }
    let n = tape.value(z_t).rows();
    let eps_c = den.forward(tape, bind, z_t, t, &vec![c; n])?;
    let eps_null = den.forward(tape, bind, z_t, t, &vec![Condition::Null; n])?;
    let diff = tape.sub(eps_c, eps_null)?;
    let diff = tape.scale(diff, s)?;
    tape.add(eps_null, diff)
}
