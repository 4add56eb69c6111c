use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// An `n × d` point set with a free-form provenance tag.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    points: Tensor,
    pub tag: String,
}

impl SampleSet {
    pub fn new(points: Tensor, tag: impl Into<String>) -> Result<Self> {
        if points.ndim() != 2 {
            return Err(Error::shape("sample set", points.shape(), &[]));
        }
        if !points.is_finite() {
            return Err(Error::NonFinite("sample set".into()));
        }
        Ok(Self {
            points,
            tag: tag.into(),
        })
    }

    pub fn points(&self) -> &Tensor {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d];
        for i in 0..self.len() {
            for (mj, x) in m.iter_mut().zip(self.row(i)) {
                *mj += x;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.len() as f64);
        m
    }

    /// Unbiased sample covariance, row-major `d × d`.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim();
        let mu = self.mean();
        let mut c = vec![0.0; d * d];
        for i in 0..self.len() {
            let r = self.row(i);
            for a in 0..d {
                for b in 0..d {
                    c[a * d + b] += (r[a] - mu[a]) * (r[b] - mu[b]);
                }
            }
        }
        let denom = (self.len() - 1) as f64;
        c.iter_mut().for_each(|v| *v /= denom);
        c
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
