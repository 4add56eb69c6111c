use crate::diffusion::Condition;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Per-timestep weight applied to the score residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    OneMinusAlphaBar,
    Constant1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdsConfig {
    /// Guidance weight.
    pub s: f64,
    /// Exclusive lower timestep bound.
    pub t_min: usize,
    /// Inclusive upper timestep bound.
    pub t_max: usize,
    pub lambda_dir: f64,
    pub lambda_rec: f64,
    pub lr: f64,
    pub iters: usize,
    pub batch: usize,
    /// Number of synthesis layers fine-tuned.
    pub k: usize,
    /// Code-optimization iterations used to rank layers.
    pub probe_iters: usize,
    pub target: Condition,
    pub seed: u64,
    pub weighting: Weighting,
    /// Reuse the trainable branch's `(t, ε)` for the frozen branch.
    pub share_noise: bool,
    pub eval_every: usize,
    pub eval_samples: usize,
}

impl Default for SdsConfig {
    fn default() -> Self {
        Self {
            s: 7.5,
            t_min: 0,
            t_max: 500,
            lambda_dir: 1.0,
            lambda_rec: 0.0,
            lr: 5e-4,
            iters: 2000,
            batch: 8,
            k: 4,
            probe_iters: 50,
            target: Condition::Class(1),
            seed: 0,
            weighting: Weighting::OneMinusAlphaBar,
            share_noise: true,
            eval_every: 50,
            eval_samples: 512,
        }
    }
}

impl SdsConfig {
    /// Check ranges against a schedule of `steps` timesteps and a generator of `layers` layers.
    pub fn validate(&self, steps: usize, layers: usize) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        if self.t_min >= self.t_max {
            return bad("sds.t_min", format!("must be below sds.t_max ({} >= {})", self.t_min, self.t_max));
        }
        if self.t_max > steps {
            return bad("sds.t_max", format!("{} exceeds the {steps} schedule steps", self.t_max));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return bad("sds.s", format!("must be a finite non-negative number, got {}", self.s));
        }
        if !(self.lambda_dir >= 0.0) || !self.lambda_dir.is_finite() {
            return bad("sds.lambda_dir", format!("must be non-negative, got {}", self.lambda_dir));
        }
        if !(self.lambda_rec >= 0.0) || !self.lambda_rec.is_finite() {
            return bad("sds.lambda_rec", format!("must be non-negative, got {}", self.lambda_rec));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("sds.lr", format!("must be positive, got {}", self.lr));
        }
        if self.batch == 0 {
            return bad("sds.batch", "must be positive".into());
        }
        if self.k == 0 || self.k > layers {
            return bad("sds.k", format!("must lie in 1..={layers}, got {}", self.k));
        }
        if self.eval_every == 0 {
            return bad("sds.eval_every", "must be positive".into());
        }
        if self.eval_samples < 3 {
            return bad("sds.eval_samples", format!("needs at least 3 samples, got {}", self.eval_samples));
        }
        if self.target == Condition::Null {
            return bad("sds.target", "must name a class".into());
        }
        Ok(())
    }
}

/// Integer timestep uniform on `(t_min, t_max]`.
pub fn sample_timestep(rng: &mut Rng, cfg: &SdsConfig) -> Result<usize> {
    if cfg.t_min >= cfg.t_max {
        return Err(Error::Config(format!(
            "empty timestep range ({}, {}]",
            cfg.t_min, cfg.t_max
        )));
    }
    Ok(rng.uniform_int(cfg.t_min + 1, cfg.t_max))
}
