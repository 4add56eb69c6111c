use super::samples::{sq_dist, SampleSet};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Median of all pairwise distances between rows (upper median for even counts).
pub fn median_pairwise_distance(points: &Tensor) -> f64 {
    let n = points.rows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_dist(points.row(i), points.row(j)));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    m.sqrt()
}

/// Unbiased Gaussian-kernel MMD² with `k(x, y) = exp(-|x-y|² / (2h²))`.
///
/// `bandwidth = None` uses the median pairwise distance of the pooled set.
pub fn mmd_squared(a: &SampleSet, b: &SampleSet, bandwidth: Option<f64>) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Usage("mmd needs at least 2 samples per set".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::shape("mmd", a.points().shape(), b.points().shape()));
    }
    let h = match bandwidth {
        Some(h) => h,
        None => median_pairwise_distance(&Tensor::vstack(&[a.points(), b.points()])?),
    };
    if !(h > 0.0) {
        return Err(Error::Usage(format!("mmd bandwidth must be positive, got {h}")));
    }
    let gamma = 1.0 / (2.0 * h * h);
    let k = |x: &[f64], y: &[f64]| (-gamma * sq_dist(x, y)).exp();
    let within = |s: &SampleSet| {
        let n = s.len();
        let mut t = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                t += k(s.row(i), s.row(j));
            }
        }
        2.0 * t / (n * (n - 1)) as f64
    };
    let mut cross = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            cross += k(a.row(i), b.row(j));
        }
    }
    cross /= (a.len() * b.len()) as f64;
    Ok(within(a) + within(b) - 2.0 * cross)
}
