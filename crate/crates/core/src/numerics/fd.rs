use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Central-difference gradient of a scalar function, one coordinate at a time.
pub fn finite_difference_grad<F>(mut f: F, x: &Tensor, h: f64) -> Result<Tensor>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::Usage(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let down = f(&probe)?;
        probe.data_mut()[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    Tensor::new(x.shape().to_vec(), grad)
}

/// `max_i |a_i - b_i| / max(max_i |b_i|, floor)`: relative error against the oracle `b`.
pub fn relative_error(a: &Tensor, b: &Tensor, floor: f64) -> Result<f64> {
    let diff = a.max_abs_diff(b)?;
    let scale = b.data().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(floor);
    Ok(diff / scale)
}
