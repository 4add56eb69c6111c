use sdsforge::generator::*;
use sdsforge::metrics::{mmd_squared, SampleSet};
use sdsforge::numerics::{finite_difference_grad, relative_error, Rng, Tape, Tensor};
use sdsforge::optim::Adam;
use sdsforge::params::{Grads, Params};
use sdsforge::Result;

fn gen(seed: u64) -> StyleGenerator {
    StyleGenerator::new(GeneratorArch::default(), &mut Rng::seed_from_u64(seed)).unwrap()
}

fn weighted_sum(tape: &mut Tape, y: sdsforge::numerics::Var, w: &Tensor) -> Result<sdsforge::numerics::Var> {
    let wv = tape.constant(w.clone())?;
    let p = tape.mul(y, wv)?;
    tape.sum(p)
}

#[test]
fn mapping_jacobian_matches_finite_differences() {
    let g = gen(1);
    let mut rng = Rng::seed_from_u64(2);
    for _ in 0..20 {
        let z = rng.normal_tensor(&[2, 8]);
        let w = rng.normal_tensor(&[2, 8]);
        let f = |z: &Tensor| -> Result<(f64, Option<Tensor>)> {
            let mut tape = Tape::new();
            let bind = g.params().bind(&mut tape, |_| false)?;
            let zv = tape.param(z.clone())?;
            let out = g.map_on(&mut tape, &bind, zv)?;
            let s = weighted_sum(&mut tape, out, &w)?;
            tape.backward(s, &Tensor::scalar(1.0))?;
            Ok((tape.value(s).item(), tape.grad(zv)))
        };
        let analytic = f(&z).unwrap().1.unwrap();
        let fd = finite_difference_grad(|z| f(z).map(|r| r.0), &z, 1e-6).unwrap();
        assert!(relative_error(&analytic, &fd, 1e-8).unwrap() <= 1e-5);
    }
}

#[test]
fn code_gradient_at_one_layer_matches_finite_differences() {
    let g = gen(3);
    let mut rng = Rng::seed_from_u64(4);
    let layer = 1;
    for _ in 0..20 {
        let codes = g.map_latent(&rng.normal_tensor(&[3, 8])).unwrap();
        let w = rng.normal_tensor(&[3, 2]);
        let f = |slot: &Tensor| -> Result<(f64, Option<Tensor>)> {
            let mut tape = Tape::new();
            let bind = g.params().bind(&mut tape, |_| false)?;
            let mut vars = Vec::new();
            for (l, c) in codes.slots.iter().enumerate() {
                vars.push(if l == layer { tape.param(slot.clone())? } else { tape.constant(c.clone())? });
            }
            let x = g.synthesize_on(&mut tape, &bind, &vars)?;
            let s = weighted_sum(&mut tape, x, &w)?;
            tape.backward(s, &Tensor::scalar(1.0))?;
            Ok((tape.value(s).item(), tape.grad(vars[layer])))
        };
        let slot = &codes.slots[layer];
        let analytic = f(slot).unwrap().1.unwrap();
        let fd = finite_difference_grad(|s| f(s).map(|r| r.0), slot, 1e-6).unwrap();
        assert!(relative_error(&analytic, &fd, 1e-8).unwrap() <= 1e-5);
    }
}

#[test]
fn squared_norm_gradient_through_encoder_is_twice_input() {
    let mut rng = Rng::seed_from_u64(5);
    for enc in [LatentEncoder::Identity, LatentEncoder::fixed_orthogonal(2, &mut Rng::seed_from_u64(6))] {
        for _ in 0..20 {
            let x = rng.normal_tensor(&[1, 2]);
            let mut tape = Tape::new();
            let xv = tape.param(x.clone()).unwrap();
            let z = enc.encode_on(&mut tape, xv).unwrap();
            let sq = tape.mul(z, z).unwrap();
            let s = tape.sum(sq).unwrap();
            tape.backward(s, &Tensor::scalar(1.0)).unwrap();
            let grad = tape.grad(xv).unwrap();
            assert!(grad.max_abs_diff(&x.map(|v| 2.0 * v)).unwrap() < 1e-12);
            let fd = finite_difference_grad(
                |x| Ok(enc.encode(x)?.data().iter().map(|v| v * v).sum()),
                &x,
                1e-6,
            )
            .unwrap();
            assert!(relative_error(&grad, &fd, 1e-8).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn end_to_end_parameter_gradients_match_finite_differences() {
    let enc = LatentEncoder::fixed_orthogonal(2, &mut Rng::seed_from_u64(7));
    let mut rng = Rng::seed_from_u64(8);
    let g = gen(9);
    let z = rng.normal_tensor(&[2, 8]);
    let loss = |p: &Params| -> Result<(f64, Grads)> {
        let g = StyleGenerator::from_params(p.clone())?;
        let mut tape = Tape::new();
        let bind = g.params().bind(&mut tape, |n| n.starts_with("syn."))?;
        let zv = tape.constant(z.clone())?;
        let x = g.forward_on(&mut tape, &bind, zv)?;
        let e = enc.encode_on(&mut tape, x)?;
        let sq = tape.mul(e, e)?;
        let s = tape.sum(sq)?;
        tape.backward(s, &Tensor::scalar(1.0))?;
        Ok((tape.value(s).item(), bind.grads(&tape)))
    };
    let (_, grads) = loss(g.params()).unwrap();
    assert_eq!(grads.len(), 1 + 6 * 4);
    for (name, analytic) in &grads {
        let base = g.params().get(name).unwrap().clone();
        let fd = finite_difference_grad(
            |v| {
                let mut p = g.params().clone();
                *p.get_mut(name)? = v.clone();
                loss(&p).map(|r| r.0)
            },
            &base,
            1e-6,
        )
        .unwrap();
        let err = relative_error(analytic, &fd, 1e-6).unwrap();
        assert!(err <= 1e-4, "{name}: {err:e}");
    }
}

#[test]
fn style_locality() {
    let mut g = gen(10);
    for l in [0, 2, 3] {
        *g.params_mut().get_mut(&names::scale_weight(l)).unwrap() = Tensor::zeros(&[8, 32]);
        *g.params_mut().get_mut(&names::shift_weight(l)).unwrap() = Tensor::zeros(&[8, 32]);
    }
    let codes = g.map_latent(&Rng::seed_from_u64(11).normal_tensor(&[4, 8])).unwrap();
    let base = g.synthesize(&codes).unwrap();
    for l in 0..4 {
        let mut moved = codes.clone();
        moved.slots[l] = moved.slots[l].map(|v| v + 0.3);
        let out = g.synthesize(&moved).unwrap();
        if l == 1 {
            assert!(out.max_abs_diff(&base).unwrap() > 1e-6);
        } else {
            assert_eq!(out, base, "layer {l}");
        }
    }
}

#[test]
fn snapshots_are_independent_copies() {
    let mut g = gen(12);
    let snap = g.snapshot_frozen();
    let hash = snap.params().hash();
    let z = Rng::seed_from_u64(13).normal_tensor(&[5, 8]);
    assert_eq!(snap.sample(&z).unwrap(), g.sample(&z).unwrap());
    assert_eq!(snap.snapshot_frozen(), snap);
    let mut adam = Adam::new(1e-2);
    let mut rng = Rng::seed_from_u64(14);
    for _ in 0..100 {
        let grads: Grads = g
            .params()
            .iter()
            .map(|(n, t)| (n.clone(), rng.normal_tensor(t.shape())))
            .collect();
        adam.step(g.params_mut(), &grads).unwrap();
    }
    assert_ne!(g.params().hash(), hash);
    assert_eq!(snap.params().hash(), hash);
}

#[test]
fn pretraining_matches_source_distribution() {
    let mut rng = Rng::seed_from_u64(15);
    let n = 2000;
    let data: Vec<f64> = (0..n).flat_map(|_| [-2.0 + 0.5 * rng.normal(), 0.5 * rng.normal()]).collect();
    let source = Tensor::matrix(n, 2, data).unwrap();
    let cfg = PretrainConfig {
        seed: 16,
        ..Default::default()
    };
    let out = pretrain_generator(&source, GeneratorArch::default(), &cfg).unwrap();
    assert_eq!(out.losses.len(), 10_000);
    let x = out.generator.sample(&rng.normal_tensor(&[1000, 8])).unwrap();
    let set = SampleSet::new(x, "gen").unwrap();
    let mean = set.mean();
    assert!((mean[0] + 2.0).abs() < 0.2 && mean[1].abs() < 0.2, "{mean:?}");
    let reference = SampleSet::new(
        Tensor::matrix(1000, 2, (0..1000).flat_map(|_| [-2.0 + 0.5 * rng.normal(), 0.5 * rng.normal()]).collect()).unwrap(),
        "ref",
    )
    .unwrap();
    let mmd = mmd_squared(&set, &reference, None).unwrap();
    eprintln!("pretrained mean {mean:?} mmd2 {mmd:e}");
    assert!(mmd < 5e-3, "{mmd}");
}
