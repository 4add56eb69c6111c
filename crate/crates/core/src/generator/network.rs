//! Mapping network plus style-modulated synthesis layers.
//!
//! Layer `l` computes `h' = leaky_relu(scale ⊙ (h W_l + b_l) + shift)` where
//! `scale = 1 + w_l A_l + a_l` and `shift = w_l S_l + s_l` are affine in that
//! layer's style code. Zero style affines give `scale = 1`, `shift = 0`.

use crate::diffusion::init_weight;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tape, Tensor, Var};
use crate::params::{Bindings, Params};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorArch {
    pub latent_dim: usize,
    pub style_dim: usize,
    pub map_hidden: usize,
    pub layers: usize,
    pub hidden: usize,
    pub out_dim: usize,
}

impl Default for GeneratorArch {
    fn default() -> Self {
        Self {
            latent_dim: 8,
            style_dim: 8,
            map_hidden: 32,
            layers: 4,
            hidden: 32,
            out_dim: 2,
        }
    }
}

/// One style vector per synthesis layer (the W+ space); each slot is `[B, style_dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleCodes {
    pub slots: Vec<Tensor>,
}

impl StyleCodes {
    pub fn broadcast(w: Tensor, layers: usize) -> Self {
        Self {
            slots: vec![w; layers],
        }
    }

    pub fn batch(&self) -> usize {
        self.slots.first().map_or(0, Tensor::rows)
    }
}

pub mod names {
    pub const MAP0_W: &str = "map.0.weight";
    pub const MAP0_B: &str = "map.0.bias";
    pub const MAP1_W: &str = "map.1.weight";
    pub const MAP1_B: &str = "map.1.bias";
    pub const SEED: &str = "syn.const";
    pub const OUT_W: &str = "out.weight";
    pub const OUT_B: &str = "out.bias";

    pub fn weight(l: usize) -> String {
        format!("syn.{l}.weight")
    }
    pub fn bias(l: usize) -> String {
        format!("syn.{l}.bias")
    }
    pub fn scale_weight(l: usize) -> String {
        format!("syn.{l}.style_scale.weight")
    }
    pub fn scale_bias(l: usize) -> String {
        format!("syn.{l}.style_scale.bias")
    }
    pub fn shift_weight(l: usize) -> String {
        format!("syn.{l}.style_shift.weight")
    }
    pub fn shift_bias(l: usize) -> String {
        format!("syn.{l}.style_shift.bias")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StyleGenerator {
    arch: GeneratorArch,
    params: Params,
}

impl StyleGenerator {
    pub fn new(arch: GeneratorArch, rng: &mut Rng) -> Result<Self> {
        let a = &arch;
        if [a.latent_dim, a.style_dim, a.map_hidden, a.layers, a.hidden, a.out_dim].contains(&0) {
            return Err(Error::Config(format!("invalid generator architecture {arch:?}")));
        }
        let mut p = Params::new();
        p.insert(names::MAP0_W, init_weight(rng, a.latent_dim, a.map_hidden));
        p.insert(names::MAP0_B, Tensor::zeros(&[a.map_hidden]));
        p.insert(names::MAP1_W, init_weight(rng, a.map_hidden, a.style_dim));
        p.insert(names::MAP1_B, Tensor::zeros(&[a.style_dim]));
        p.insert(names::SEED, rng.normal_tensor(&[a.hidden]));
        for l in 0..a.layers {
            p.insert(names::weight(l), init_weight(rng, a.hidden, a.hidden));
            p.insert(names::bias(l), Tensor::zeros(&[a.hidden]));
            let style_gain = 0.5;
            p.insert(
                names::scale_weight(l),
                init_weight(rng, a.style_dim, a.hidden).map(|v| v * style_gain),
            );
            p.insert(names::scale_bias(l), Tensor::zeros(&[a.hidden]));
            p.insert(
                names::shift_weight(l),
                init_weight(rng, a.style_dim, a.hidden).map(|v| v * style_gain),
            );
            p.insert(names::shift_bias(l), Tensor::zeros(&[a.hidden]));
        }
        p.insert(names::OUT_W, init_weight(rng, a.hidden, a.out_dim));
        p.insert(names::OUT_B, Tensor::zeros(&[a.out_dim]));
        Ok(Self { arch, params: p })
    }

    /// Rebuild from checkpoint arrays, inferring the architecture from shapes.
    pub fn from_params(params: Params) -> Result<Self> {
        let m0 = params.get(names::MAP0_W)?;
        let m1 = params.get(names::MAP1_W)?;
        let out = params.get(names::OUT_W)?;
        if m0.ndim() != 2 || m1.ndim() != 2 || out.ndim() != 2 {
            return Err(Error::Config("generator arrays have unexpected rank".into()));
        }
        let mut layers = 0;
        while params.contains(&names::weight(layers)) {
            layers += 1;
        }
        let arch = GeneratorArch {
            latent_dim: m0.rows(),
            map_hidden: m0.cols(),
            style_dim: m1.cols(),
            layers,
            hidden: out.rows(),
            out_dim: out.cols(),
        };
        let template = Self::new(arch.clone(), &mut Rng::seed_from_u64(0))?;
        if template.params.len() != params.len() {
            return Err(Error::Config(format!(
                "generator checkpoint has {} arrays, expected {}",
                params.len(),
                template.params.len()
            )));
        }
        for (name, t) in template.params.iter() {
            let got = params.get(name)?;
            if got.shape() != t.shape() {
                return Err(Error::Config(format!(
                    "generator array `{name}` has shape {:?}, expected {:?}",
                    got.shape(),
                    t.shape()
                )));
            }
        }
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> &GeneratorArch {
        &self.arch
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    /// Deep copy used as the frozen reference during adaptation.
    pub fn snapshot_frozen(&self) -> StyleGenerator {
        self.clone()
    }

    pub fn map_on(&self, tape: &mut Tape, bind: &Bindings, z: Var) -> Result<Var> {
        let zv = tape.value(z);
        if zv.ndim() != 2 || zv.cols() != self.arch.latent_dim {
            return Err(Error::shape("map_latent", zv.shape(), &[self.arch.latent_dim]));
        }
        let h = tape.matmul(z, bind.get(names::MAP0_W)?)?;
        let h = tape.add(h, bind.get(names::MAP0_B)?)?;
        let h = tape.leaky_relu(h)?;
        let w = tape.matmul(h, bind.get(names::MAP1_W)?)?;
        tape.add(w, bind.get(names::MAP1_B)?)
    }

    pub fn synthesize_on(&self, tape: &mut Tape, bind: &Bindings, codes: &[Var]) -> Result<Var> {
        if codes.len() != self.arch.layers {
            return Err(Error::shape("synthesize slots", &[codes.len()], &[self.arch.layers]));
        }
        let batch = tape.value(codes[0]).rows();
        for &c in codes {
            let cv = tape.value(c);
            if cv.ndim() != 2 || cv.rows() != batch || cv.cols() != self.arch.style_dim {
                return Err(Error::shape("style code", cv.shape(), &[batch, self.arch.style_dim]));
            }
        }
        let mut h = tape.broadcast_rows(bind.get(names::SEED)?, batch)?;
        for (l, &w) in codes.iter().enumerate() {
            let pre = tape.matmul(h, bind.get(&names::weight(l))?)?;
            let pre = tape.add(pre, bind.get(&names::bias(l))?)?;
            let scale = tape.matmul(w, bind.get(&names::scale_weight(l))?)?;
            let scale = tape.add(scale, bind.get(&names::scale_bias(l))?)?;
            let scale = tape.add_scalar(scale, 1.0)?;
            let shift = tape.matmul(w, bind.get(&names::shift_weight(l))?)?;
            let shift = tape.add(shift, bind.get(&names::shift_bias(l))?)?;
            let modulated = tape.mul(pre, scale)?;
            let modulated = tape.add(modulated, shift)?;
            h = tape.leaky_relu(modulated)?;
        }
        let x = tape.matmul(h, bind.get(names::OUT_W)?)?;
        tape.add(x, bind.get(names::OUT_B)?)
    }

    /// Standard (non-W+) pass: one mapped code shared by every layer.
    pub fn forward_on(&self, tape: &mut Tape, bind: &Bindings, z: Var) -> Result<Var> {
        let w = self.map_on(tape, bind, z)?;
        let codes = vec![w; self.arch.layers];
        self.synthesize_on(tape, bind, &codes)
    }

    pub fn map_latent(&self, z: &Tensor) -> Result<StyleCodes> {
        let mut tape = Tape::new();
        let bind = self.params.bind(&mut tape, |_| false)?;
        let zv = tape.constant(z.clone())?;
        let w = self.map_on(&mut tape, &bind, zv)?;
        Ok(StyleCodes::broadcast(tape.value(w).clone(), self.arch.layers))
    }

    pub fn synthesize(&self, codes: &StyleCodes) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bind = self.params.bind(&mut tape, |_| false)?;
        let vars = codes
            .slots
            .iter()
            .map(|c| tape.constant(c.clone()))
            .collect::<Result<Vec<_>>>()?;
        let x = self.synthesize_on(&mut tape, &bind, &vars)?;
        Ok(tape.value(x).clone())
    }

    /// Generated samples `[B, out_dim]` for latents `z: [B, latent_dim]`.
    pub fn sample(&self, z: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bind = self.params.bind(&mut tape, |_| false)?;
        let zv = tape.constant(z.clone())?;
        let x = self.forward_on(&mut tape, &bind, zv)?;
        Ok(tape.value(x).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen() -> StyleGenerator {
        StyleGenerator::new(GeneratorArch::default(), &mut Rng::seed_from_u64(5)).unwrap()
    }

    #[test]
    fn broadcast_codes_reproduce_standard_pass_bitwise() {
        let g = gen();
        let z = Rng::seed_from_u64(1).normal_tensor(&[6, 8]);
        let codes = g.map_latent(&z).unwrap();
        assert_eq!(codes.slots.len(), 4);
        assert_eq!(g.synthesize(&codes).unwrap(), g.sample(&z).unwrap());
    }

    #[test]
    fn identical_latents_identical_codes() {
        let g = gen();
        let z = Rng::seed_from_u64(1).normal_tensor(&[1, 8]);
        let two = Tensor::vstack(&[&z, &z]).unwrap();
        let codes = g.map_latent(&two).unwrap();
        assert_eq!(codes.slots[0].row(0), codes.slots[0].row(1));
    }

    #[test]
    fn zero_final_mapping_layer_yields_its_bias() {
        let mut g = gen();
        *g.params_mut().get_mut(names::MAP1_W).unwrap() = Tensor::zeros(&[32, 8]);
        let bias = Tensor::vector((0..8).map(|i| i as f64 * 0.1).collect());
        *g.params_mut().get_mut(names::MAP1_B).unwrap() = bias.clone();
        let codes = g.map_latent(&Tensor::zeros(&[1, 8])).unwrap();
        assert_eq!(codes.slots[0].row(0), bias.data());
    }

    #[test]
    fn zeroed_style_affines_make_output_code_independent() {
        let mut g = gen();
        for l in 0..4 {
            *g.params_mut().get_mut(&names::scale_weight(l)).unwrap() = Tensor::zeros(&[8, 32]);
            *g.params_mut().get_mut(&names::shift_weight(l)).unwrap() = Tensor::zeros(&[8, 32]);
        }
        let mut rng = Rng::seed_from_u64(2);
        let a = g.sample(&rng.normal_tensor(&[1, 8])).unwrap();
        let b = g.sample(&rng.normal_tensor(&[1, 8])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_slot_count_and_dims_rejected() {
        let g = gen();
        let codes = StyleCodes::broadcast(Tensor::zeros(&[2, 8]), 3);
        assert!(g.synthesize(&codes).is_err());
        assert!(g.sample(&Tensor::zeros(&[2, 7])).is_err());
    }

    #[test]
    fn snapshot_is_independent_copy() {
        let mut g = gen();
        let frozen = g.snapshot_frozen();
        let h = frozen.params().hash();
        g.params_mut().get_mut(&names::weight(0)).unwrap().data_mut()[0] += 1.0;
        assert_eq!(frozen.params().hash(), h);
        assert_eq!(frozen.snapshot_frozen(), frozen);
    }

    #[test]
    fn architecture_round_trips_through_params() {
        let g = gen();
        assert_eq!(StyleGenerator::from_params(g.params().clone()).unwrap(), g);
    }
}
