use proptest::prelude::*;

use sdsforge::checkpoint;
use sdsforge::diffusion::*;
use sdsforge::numerics::{Rng, Tape, Tensor};

fn small_denoiser(seed: u64) -> Denoiser {
    let arch = DenoiserArch {
        latent_dim: 2,
        classes: 2,
        hidden: vec![32, 32],
    };
    Denoiser::new(arch, &mut Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn hand_schedule_and_default_golden() {
    let s = NoiseSchedule::linear(2, 0.1, 0.2).unwrap();
    assert!((s.alpha_bar(1).unwrap() - 0.9).abs() < 1e-15);
    assert!((s.alpha_bar(2).unwrap() - 0.72).abs() < 1e-15);
    let d = NoiseSchedule::default();
    let last = d.alpha_bar(1000).unwrap();
    assert!(last > 0.0 && last < 0.01);
    // Independent product of the same betas computed outside this crate.
    assert!((last - 4.0358297653756754e-05).abs() < 1e-17);
    assert!(NoiseSchedule::linear(1000, 0.02, 1e-4).is_err());
    assert!(NoiseSchedule::linear(1, 0.01, 0.01).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_invariants(steps in 2usize..1500, b0 in 1e-6f64..0.05, width in 0.0f64..0.3) {
        let b1 = (b0 + width).min(0.999);
        let s = NoiseSchedule::linear(steps, b0, b1).unwrap();
        let betas = s.betas();
        prop_assert!(betas[0] > 0.0 && betas[steps - 1] < 1.0);
        prop_assert!(betas.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(s.alpha_bar(1).unwrap(), s.alpha(1).unwrap());
        for t in 2..=steps {
            let ab = s.alpha_bar(t).unwrap();
            let prev = s.alpha_bar(t - 1).unwrap();
            prop_assert!(ab < prev);
            prop_assert!((ab - s.alpha(t).unwrap() * prev).abs() <= 1e-12);
        }
        prop_assert!(s.alpha_bar(steps).unwrap() > 0.0);
    }

    #[test]
    fn tweedie_inverts_q_sample(
        z0 in prop::collection::vec(-5.0f64..5.0, 6),
        eps in prop::collection::vec(-4.0f64..4.0, 6),
        t in prop::collection::vec(1usize..=1000, 3),
    ) {
        let sched = NoiseSchedule::default();
        let z0 = Tensor::matrix(3, 2, z0).unwrap();
        let eps = Tensor::matrix(3, 2, eps).unwrap();
        let zt = q_sample(&z0, &t, &eps, &sched).unwrap();
        let back = tweedie_z0(&zt, &eps, &t, &sched).unwrap();
        prop_assert!(back.max_abs_diff(&z0).unwrap() <= 1e-9);
    }

    #[test]
    fn guidance_is_affine_in_weight(seed in 0u64..1000, s in -2.0f64..12.0, t in 1usize..=1000) {
        let den = small_denoiser(seed % 7);
        let z = Rng::seed_from_u64(seed).normal_tensor(&[3, 2]);
        let ts = [t; 3];
        let c = Condition::Class((seed % 2) as usize);
        let e0 = cfg_score(&den, &z, &ts, c, 0.0).unwrap();
        let e1 = cfg_score(&den, &z, &ts, c, 1.0).unwrap();
        let es = cfg_score(&den, &z, &ts, c, s).unwrap();
        let affine = e0.zip_with(&e1, |a, b| a + s * (b - a)).unwrap();
        prop_assert!(es.max_abs_diff(&affine).unwrap() <= 1e-12);
    }
}

#[test]
fn guidance_endpoints_match_branch_predictions() {
    let den = small_denoiser(3);
    let z = Rng::seed_from_u64(4).normal_tensor(&[5, 2]);
    let t = [1, 100, 400, 800, 1000];
    let c = Condition::Class(1);
    let cond = den.predict_eps(&z, &t, &[c; 5]).unwrap();
    let null = den.predict_eps(&z, &t, &[Condition::Null; 5]).unwrap();
    assert_eq!(cfg_score(&den, &z, &t, c, 0.0).unwrap(), null);
    assert!(cfg_score(&den, &z, &t, c, 1.0).unwrap().max_abs_diff(&cond).unwrap() <= 1e-12);

    let mut tape = Tape::new();
    let bind = den.params().bind(&mut tape, |_| false).unwrap();
    let zv = tape.constant(z.clone()).unwrap();
    let taped = cfg_score_on(&mut tape, &den, &bind, zv, &t, c, 7.5).unwrap();
    assert_eq!(tape.value(taped), &cfg_score(&den, &z, &t, c, 7.5).unwrap());
}

#[test]
fn loss_replays_its_own_draws() {
    let den = small_denoiser(9);
    let sched = NoiseSchedule::default();
    let z0 = Rng::seed_from_u64(10).normal_tensor(&[256, 2]);
    let cond: Vec<Condition> = (0..256).map(|i| Condition::Class(i % 2)).collect();
    let mut rng = Rng::seed_from_u64(11);
    let loss = denoiser_loss(&den, &z0, &cond, &sched, &mut rng, 0.1).unwrap();

    let mut replay = Rng::seed_from_u64(11);
    let draws = LossDraws::sample(&mut replay, &cond, 2, &sched, 0.1);
    assert!(draws.cond.iter().any(|c| *c == Condition::Null));
    let zt = q_sample(&z0, &draws.t, &draws.eps, &sched).unwrap();
    let pred = den.predict_eps(&zt, &draws.t, &draws.cond).unwrap();
    let mc: f64 = pred
        .data()
        .iter()
        .zip(draws.eps.data())
        .map(|(p, e)| (p - e) * (p - e))
        .sum::<f64>()
        / 256.0;
    assert!((loss - mc).abs() <= 1e-12 * mc.max(1.0));
    assert!(loss >= 0.0);
}

#[test]
fn ancestral_sampling_contracts() {
    let den = small_denoiser(12);
    let sched = NoiseSchedule::linear(50, 1e-3, 0.05).unwrap();
    let empty = ancestral_sample(&den, Condition::Class(0), 2.0, &sched, &mut Rng::seed_from_u64(1), 0).unwrap();
    assert_eq!(empty.shape(), &[0, 2]);
    let a = ancestral_sample(&den, Condition::Class(1), 2.0, &sched, &mut Rng::seed_from_u64(2), 16).unwrap();
    let b = ancestral_sample(&den, Condition::Class(1), 2.0, &sched, &mut Rng::seed_from_u64(2), 16).unwrap();
    assert_eq!(a, b);
    assert!(a.is_finite());
}

#[test]
fn denoiser_checkpoint_round_trip() {
    let den = small_denoiser(13);
    let text = checkpoint::to_string(den.params());
    assert!(text.starts_with("SDSFORGE-CKPT v1\n"));
    assert!(text.ends_with("END\n"));
    let back = Denoiser::from_params(checkpoint::parse(&text).unwrap()).unwrap();
    assert_eq!(back, den);
    let mut wrong = checkpoint::parse(&text).unwrap();
    wrong.insert("den.extra", Tensor::zeros(&[1]));
    assert!(Denoiser::from_params(wrong).is_err());
}

#[test]
fn training_reduces_loss() {
    let mut rng = Rng::seed_from_u64(14);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..512 {
        let c = i % 2;
        rows.push(if c == 0 { -2.0 } else { 2.0 } + 0.5 * rng.normal());
        rows.push(0.5 * rng.normal());
        labels.push(c);
    }
    let data = LabeledSamples::new(Tensor::matrix(512, 2, rows).unwrap(), labels).unwrap();
    let cfg = DenoiserTrainConfig {
        steps: 400,
        batch: 64,
        seed: 15,
        ..Default::default()
    };
    let arch = DenoiserArch {
        latent_dim: 2,
        classes: 2,
        hidden: vec![64, 64],
    };
    let out = train_denoiser(&data, arch, &cfg, &NoiseSchedule::default()).unwrap();
    let head: f64 = out.losses[..50].iter().sum::<f64>() / 50.0;
    let tail: f64 = out.losses[350..].iter().sum::<f64>() / 50.0;
    assert!(tail < 0.6 * head, "head {head} tail {tail}");
}
