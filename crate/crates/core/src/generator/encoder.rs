use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tape, Tensor, Var};

/// Fixed map from generator output into the critic's latent space. Never trained.
#[derive(Clone, Debug, PartialEq)]
pub enum LatentEncoder {
    Identity,
    /// Rows are encoded as `z = x Qᵀ` with `Q` orthogonal.
    FixedOrthogonal { q: Tensor },
}

impl LatentEncoder {
    /// Orthogonal factor of the QR decomposition of a seeded Gaussian matrix,
    /// with column signs fixed so that `R` has a positive diagonal.
    pub fn fixed_orthogonal(dim: usize, rng: &mut Rng) -> Self {
        let g = rng.normal_tensor(&[dim, dim]);
        let m = DMatrix::from_row_slice(dim, dim, g.data());
        let qr = m.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..dim {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(q[(i, j)]);
            }
        }
        LatentEncoder::FixedOrthogonal {
            q: Tensor::matrix(dim, dim, data).expect("square"),
        }
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if let LatentEncoder::FixedOrthogonal { q } = self {
            if x.cols() != q.rows() {
                return Err(Error::shape("encode", x.shape(), q.shape()));
            }
        }
        Ok(())
    }

    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        self.check(x)?;
        match self {
            LatentEncoder::Identity => Ok(x.clone()),
            LatentEncoder::FixedOrthogonal { q } => {
                let rows = if x.ndim() == 1 { x.clone().reshape(vec![1, x.len()])? } else { x.clone() };
                let z = rows.matmul(&q.transpose()?)?;
                z.reshape(x.shape().to_vec())
            }
        }
    }

    /// Taped encoding; gradients pass through to `x`.
    pub fn encode_on(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        self.check(tape.value(x))?;
        match self {
            LatentEncoder::Identity => Ok(x),
            LatentEncoder::FixedOrthogonal { q } => {
                let qt = tape.constant(q.transpose()?)?;
                tape.matmul(x, qt)
            }
        }
    }
}
