use nalgebra::{DMatrix, SymmetricEigen};

use super::samples::SampleSet;
use crate::error::{Error, Result};

/// Covariances with a larger eigenvalue ratio are flagged as ill-conditioned.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrechetDistance {
    pub value: f64,
    /// Worst eigenvalue ratio of the two fitted covariances (infinite if singular).
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `|μ_a − μ_b|² + Tr(Σ_a + Σ_b − 2 (Σ_a^½ Σ_b Σ_a^½)^½)` between fitted Gaussians.
pub fn frechet_gaussian_distance(a: &SampleSet, b: &SampleSet) -> Result<FrechetDistance> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::shape("frechet distance", &[a.len(), d], &[b.len(), b.dim()]));
    }
    if a.len() < d + 1 || b.len() < d + 1 {
        return Err(Error::Usage(format!(
            "frechet distance needs at least {} samples per set, got {} and {}",
            d + 1,
            a.len(),
            b.len()
        )));
    }
    let (mu_a, mu_b) = (a.mean(), b.mean());
    let ca = DMatrix::from_row_slice(d, d, &a.covariance());
    let cb = DMatrix::from_row_slice(d, d, &b.covariance());
    let root_a = sym_sqrt(&ca);
    let inner = &root_a * &cb * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let mean_term: f64 = mu_a.iter().zip(&mu_b).map(|(x, y)| (x - y) * (x - y)).sum();
    let value = (mean_term + ca.trace() + cb.trace() - 2.0 * cross).max(0.0);
    let cond = condition_number(&ca).max(condition_number(&cb));
    Ok(FrechetDistance {
        value,
        condition_number: cond,
        ill_conditioned: !(cond <= CONDITION_LIMIT),
    })
}
