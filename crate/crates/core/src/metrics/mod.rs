//! Desk-scale evaluation: Fréchet distance between fitted Gaussians, pairwise
//! diversity, held-out classifier condition score and kernel MMD².

mod classifier;
mod diversity;
mod frechet;
mod mmd;
mod samples;

pub use classifier::{condition_score, ClassifierConfig, ConditionClassifier};
pub use diversity::pairwise_diversity;
pub use frechet::{frechet_gaussian_distance, FrechetDistance, CONDITION_LIMIT};
pub use mmd::{median_pairwise_distance, mmd_squared};
pub use samples::SampleSet;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::Condition;
    use crate::numerics::{Rng, Tensor};

    fn gaussian(rng: &mut Rng, n: usize, mean: [f64; 2], std: f64) -> SampleSet {
        let data = (0..n).flat_map(|_| [mean[0] + std * rng.normal(), mean[1] + std * rng.normal()]).collect();
        SampleSet::new(Tensor::matrix(n, 2, data).unwrap(), "g").unwrap()
    }

    #[test]
    fn frechet_identity_is_zero() {
        let a = gaussian(&mut Rng::seed_from_u64(1), 500, [0.3, -1.0], 1.0);
        let fd = frechet_gaussian_distance(&a, &a).unwrap();
        assert!(fd.value.abs() < 1e-8);
        assert!(!fd.ill_conditioned);
    }

    #[test]
    fn frechet_needs_enough_samples_and_flags_degenerate_covariance() {
        let a = gaussian(&mut Rng::seed_from_u64(1), 2, [0.0, 0.0], 1.0);
        assert!(frechet_gaussian_distance(&a, &a).is_err());
        let line = SampleSet::new(
            Tensor::matrix(4, 2, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap(),
            "line",
        )
        .unwrap();
        let b = gaussian(&mut Rng::seed_from_u64(2), 100, [0.0, 0.0], 1.0);
        let fd = frechet_gaussian_distance(&line, &b).unwrap();
        assert!(fd.ill_conditioned);
        assert!(fd.value.is_finite());
    }

    #[test]
    fn diversity_small_cases() {
        let same = SampleSet::new(Tensor::full(&[5, 2], 1.5), "same").unwrap();
        assert_eq!(pairwise_diversity(&same).unwrap(), 0.0);
        let two = SampleSet::new(Tensor::matrix(2, 2, vec![0.0, 0.0, 3.0, 0.0]).unwrap(), "two").unwrap();
        assert_eq!(pairwise_diversity(&two).unwrap(), 3.0);
        let one = SampleSet::new(Tensor::zeros(&[1, 2]), "one").unwrap();
        assert!(pairwise_diversity(&one).is_err());
    }

    #[test]
    fn mmd_kernel_limits_and_symmetry() {
        let mut rng = Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..40).flat_map(|_| [1e-3 * rng.normal(), 1e-3 * rng.normal()]).collect();
        let b: Vec<f64> = (0..40).flat_map(|_| [10.0 + 1e-3 * rng.normal(), 1e-3 * rng.normal()]).collect();
        let a = SampleSet::new(Tensor::matrix(40, 2, a).unwrap(), "a").unwrap();
        let b = SampleSet::new(Tensor::matrix(40, 2, b).unwrap(), "b").unwrap();
        let m = mmd_squared(&a, &b, Some(1.0)).unwrap();
        assert!((m - 2.0).abs() < 1e-4, "{m}");
        let swapped = mmd_squared(&b, &a, Some(1.0)).unwrap();
        assert!((m - swapped).abs() < 1e-12);
        assert!(mmd_squared(&a, &b, Some(0.0)).is_err());
    }

    #[test]
    fn uniform_logits_score_is_log_inverse_class_count() {
        for classes in [2usize, 3, 5] {
            let mut clf = ConditionClassifier::new(2, classes, 4, &mut Rng::seed_from_u64(0));
            *clf.params_mut().get_mut("clf.1.weight").unwrap() = Tensor::zeros(&[4, classes]);
            let s = gaussian(&mut Rng::seed_from_u64(1), 10, [0.0, 0.0], 1.0);
            let score = condition_score(&s, &clf, Condition::Class(0)).unwrap();
            assert!((score - (1.0 / classes as f64).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_boundary_point_scores_log_half() {
        // Logits (x, -x): the origin sits exactly on the decision boundary.
        let mut clf = ConditionClassifier::new(2, 2, 1, &mut Rng::seed_from_u64(0));
        let p = clf.params_mut();
        *p.get_mut("clf.0.weight").unwrap() = Tensor::matrix(2, 1, vec![1.0, 0.0]).unwrap();
        *p.get_mut("clf.1.weight").unwrap() = Tensor::matrix(1, 2, vec![1.0, -1.0]).unwrap();
        let s = SampleSet::new(Tensor::zeros(&[1, 2]), "boundary").unwrap();
        assert_eq!(condition_score(&s, &clf, Condition::Class(1)).unwrap(), 0.5f64.ln());
        assert!(condition_score(&s, &clf, Condition::Null).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let clf = ConditionClassifier::new(2, 3, 8, &mut Rng::seed_from_u64(3));
        let x = Rng::seed_from_u64(5).normal_tensor(&[20, 2]);
        let lp = clf.log_probs(&x).unwrap();
        for r in 0..20 {
            let s: f64 = lp.row(r).iter().map(|v| v.exp()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
