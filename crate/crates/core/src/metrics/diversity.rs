use super::samples::{sq_dist, SampleSet};
use crate::error::{Error, Result};

/// Mean Euclidean distance over all unordered pairs.
pub fn pairwise_diversity(a: &SampleSet) -> Result<f64> {
    let n = a.len();
    if n < 2 {
        return Err(Error::Usage(format!("diversity needs at least 2 samples, got {n}")));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += sq_dist(a.row(i), a.row(j)).sqrt();
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}
