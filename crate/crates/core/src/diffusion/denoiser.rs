//! Conditional ε-prediction MLP with a learned null-condition embedding.

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tape, Tensor, Var};
use crate::params::{Bindings, Params};

pub const TIME_EMBED_DIM: usize = 32;
pub const COND_EMBED_DIM: usize = 16;

const COND_TABLE: &str = "den.cond_embed";
const OUT_WEIGHT: &str = "den.out.weight";
const OUT_BIAS: &str = "den.out.bias";

/// A class condition or the reserved null token used for unconditional prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Class(usize),
    Null,
}

/// Anything that predicts the injected noise of a noisy latent.
pub trait EpsModel {
    fn latent_dim(&self) -> usize;

    /// One prediction per row of `z_t`, each with its own timestep and condition.
    fn predict_eps(&self, z_t: &Tensor, t: &[usize], cond: &[Condition]) -> Result<Tensor>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserArch {
    pub latent_dim: usize,
    pub classes: usize,
    pub hidden: Vec<usize>,
}

impl Default for DenoiserArch {
    fn default() -> Self {
        Self {
            latent_dim: 2,
            classes: 2,
            hidden: vec![128, 128, 128],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Denoiser {
    arch: DenoiserArch,
    params: Params,
}

fn hidden_weight(i: usize) -> String {
    format!("den.hidden.{i}.weight")
}

fn hidden_bias(i: usize) -> String {
    format!("den.hidden.{i}.bias")
}

/// Sinusoidal embedding: `[sin(t·f_0..f_{h-1}), cos(t·f_0..f_{h-1})]`, `f_i = 10000^(-i/h)`.
pub fn timestep_embedding(t: &[usize], dim: usize) -> Tensor {
    let half = dim / 2;
    let mut data = Vec::with_capacity(t.len() * dim);
    for &ti in t {
        let tf = ti as f64;
        let freqs = (0..half).map(|i| (-(10000f64.ln()) * i as f64 / half as f64).exp());
        let angles: Vec<f64> = freqs.map(|f| tf * f).collect();
        data.extend(angles.iter().map(|a| a.sin()));
        data.extend(angles.iter().map(|a| a.cos()));
    }
    Tensor::matrix(t.len(), dim, data).expect("embedding shape")
}

impl Denoiser {
    pub fn new(arch: DenoiserArch, rng: &mut Rng) -> Result<Self> {
        if arch.latent_dim == 0 || arch.classes == 0 || arch.hidden.is_empty() {
            return Err(Error::Config(format!("invalid denoiser architecture {arch:?}")));
        }
        let mut params = Params::new();
        params.insert(COND_TABLE, rng.normal_tensor(&[arch.classes + 1, COND_EMBED_DIM]));
        let mut fan_in = arch.latent_dim + TIME_EMBED_DIM + COND_EMBED_DIM;
        for (i, &h) in arch.hidden.iter().enumerate() {
            params.insert(hidden_weight(i), init_weight(rng, fan_in, h));
            params.insert(hidden_bias(i), Tensor::zeros(&[h]));
            fan_in = h;
        }
        params.insert(OUT_WEIGHT, init_weight(rng, fan_in, arch.latent_dim));
        params.insert(OUT_BIAS, Tensor::zeros(&[arch.latent_dim]));
        Ok(Self { arch, params })
    }

    /// Rebuild from checkpoint arrays, inferring the architecture from shapes.
    pub fn from_params(params: Params) -> Result<Self> {
        let table = params.get(COND_TABLE)?;
        let out = params.get(OUT_WEIGHT)?;
        if table.ndim() != 2 || table.cols() != COND_EMBED_DIM || table.rows() < 2 || out.ndim() != 2 {
            return Err(Error::Config("denoiser arrays have unexpected shapes".into()));
        }
        let latent_dim = out.cols();
        let mut hidden = Vec::new();
        let mut fan_in = latent_dim + TIME_EMBED_DIM + COND_EMBED_DIM;
        while params.contains(&hidden_weight(hidden.len())) {
            let w = params.get(&hidden_weight(hidden.len()))?;
            let b = params.get(&hidden_bias(hidden.len()))?;
            if w.ndim() != 2 || w.rows() != fan_in || b.shape() != [w.cols()] {
                return Err(Error::Config(format!(
                    "denoiser layer {} has shape {:?}, expected {fan_in} inputs",
                    hidden.len(),
                    w.shape()
                )));
            }
            fan_in = w.cols();
            hidden.push(fan_in);
        }
        if hidden.is_empty() || out.rows() != fan_in || params.get(OUT_BIAS)?.shape() != [latent_dim] {
            return Err(Error::Config("denoiser output head does not match hidden layers".into()));
        }
        let expected = 3 + 2 * hidden.len();
        if params.len() != expected {
            return Err(Error::Config(format!(
                "denoiser checkpoint has {} arrays, expected {expected}",
                params.len()
            )));
        }
        let arch = DenoiserArch {
            latent_dim,
            classes: table.rows() - 1,
            hidden,
        };
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> &DenoiserArch {
        &self.arch
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    /// Embedding-table row for a condition; the null token is the last row.
    pub fn cond_row(&self, c: Condition) -> Result<usize> {
        match c {
            Condition::Null => Ok(self.arch.classes),
            Condition::Class(k) if k < self.arch.classes => Ok(k),
            Condition::Class(k) => Err(Error::Usage(format!(
                "class {k} outside 0..{}",
                self.arch.classes
            ))),
        }
    }

    pub fn null_embedding(&self) -> Tensor {
        let table = self.params.get(COND_TABLE).expect("table present");
        Tensor::vector(table.row(self.arch.classes).to_vec())
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bind: &Bindings,
        z_t: Var,
        t: &[usize],
        cond: &[Condition],
    ) -> Result<Var> {
        let zv = tape.value(z_t);
        if zv.ndim() != 2 || zv.cols() != self.arch.latent_dim {
            return Err(Error::shape("denoiser input", zv.shape(), &[t.len(), self.arch.latent_dim]));
        }
        let rows = zv.rows();
        if t.len() != rows || cond.len() != rows {
            return Err(Error::shape("denoiser conditioning", &[rows], &[t.len(), cond.len()]));
        }
        let temb = tape.constant(timestep_embedding(t, TIME_EMBED_DIM))?;
        let idx = cond.iter().map(|&c| self.cond_row(c)).collect::<Result<Vec<_>>>()?;
        let cemb = tape.gather_rows(bind.get(COND_TABLE)?, &idx)?;
        let mut h = tape.concat_cols(&[z_t, temb, cemb])?;
        for i in 0..self.arch.hidden.len() {
            h = tape.matmul(h, bind.get(&hidden_weight(i))?)?;
            h = tape.add(h, bind.get(&hidden_bias(i))?)?;
            h = tape.silu(h)?;
        }
        let out = tape.matmul(h, bind.get(OUT_WEIGHT)?)?;
        tape.add(out, bind.get(OUT_BIAS)?)
    }
}

impl EpsModel for Denoiser {
    fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    fn predict_eps(&self, z_t: &Tensor, t: &[usize], cond: &[Condition]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bind = self.params.bind(&mut tape, |_| false)?;
        let z = tape.constant(z_t.clone())?;
        let out = self.forward(&mut tape, &bind, z, t, cond)?;
        Ok(tape.value(out).clone())
    }
}

pub(crate) fn init_weight(rng: &mut Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let scale = 1.0 / (fan_in as f64).sqrt();
    rng.normal_tensor(&[fan_in, fan_out]).map(|v| v * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Denoiser {
        let arch = DenoiserArch {
            latent_dim: 2,
            classes: 2,
            hidden: vec![8, 8],
        };
        Denoiser::new(arch, &mut Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn output_matches_input_shape() {
        let d = small();
        let z = Tensor::matrix(3, 2, vec![0.1, 0.2, -1.0, 0.5, 2.0, 0.0]).unwrap();
        let cond = [Condition::Class(0), Condition::Null, Condition::Class(1)];
        let eps = d.predict_eps(&z, &[1, 500, 1000], &cond).unwrap();
        assert_eq!(eps.shape(), z.shape());
    }

    #[test]
    fn null_row_is_distinct_and_last() {
        let d = small();
        assert_eq!(d.cond_row(Condition::Null).unwrap(), 2);
        assert!(d.cond_row(Condition::Class(2)).is_err());
    }

    #[test]
    fn architecture_survives_param_round_trip() {
        let d = small();
        let back = Denoiser::from_params(d.params().clone()).unwrap();
        assert_eq!(back, d);
        let mut broken = d.params().clone();
        broken.insert("den.stray", Tensor::scalar(0.0));
        assert!(Denoiser::from_params(broken).is_err());
    }

    #[test]
    fn embedding_is_bounded_and_distinguishes_times() {
        let e = timestep_embedding(&[1, 2], TIME_EMBED_DIM);
        assert!(e.data().iter().all(|v| v.abs() <= 1.0));
        assert_ne!(e.row(0), e.row(1));
    }
}
