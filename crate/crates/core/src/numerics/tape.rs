//! Reverse-mode differentiation over a linear recording of primitive ops.
//!
//! Every op appends one node holding its value. `backward` replays the
//! recording in strict reverse order and accumulates into the gradient
//! buffers of leaves created with `requires_grad`.

use std::sync::atomic::{AtomicU64, Ordering};

use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

pub const LEAKY_SLOPE: f64 = 0.2;

/// Handle to a value recorded on a specific [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    tape: u64,
    idx: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    /// `bcast` is true when the right operand is a row vector repeated over rows.
    Add(usize, usize, bool),
    Sub(usize, usize, bool),
    Mul(usize, usize, bool),
    Scale(usize, f64),
    AddScalar(usize),
    MatMul(usize, usize),
    Sum(usize),
    Mean(usize),
    L2Norm(usize),
    Tanh(usize),
    Silu(usize),
    LeakyRelu(usize),
    Exp(usize),
    ConcatCols(Vec<usize>),
    GatherRows(usize, Vec<usize>),
    BroadcastRows(usize),
    PairwiseSqDist(usize, usize),
    LogSoftmax(usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn index(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.idx >= self.nodes.len() {
            return Err(Error::Usage("variable is not recorded on this tape".into()));
        }
        Ok(v.idx)
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool, name: &str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name.to_string()));
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Ok(Var {
            tape: self.id,
            idx: self.nodes.len() - 1,
        })
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        self.push(value, Op::Leaf, requires_grad, "leaf")
    }

    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[self.index(v).expect("foreign variable")].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.index(v).map(|i| self.nodes[i].requires_grad).unwrap_or(false)
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let i = self.index(v).ok()?;
        let node = &self.nodes[i];
        node.grad
            .as_ref()
            .map(|g| Tensor::new(node.value.shape().to_vec(), g.clone()).expect("grad shape"))
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str) -> Result<(usize, usize, bool)> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        let (sa, sb) = (self.nodes[ia].value.shape(), self.nodes[ib].value.shape());
        if sa == sb {
            return Ok((ia, ib, false));
        }
        if sa.len() == 2 && sb.len() == 1 && sa[1] == sb[0] {
            return Ok((ia, ib, true));
        }
        Err(Error::shape(name, sa, sb))
    }

    fn elementwise(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: fn(usize, usize, bool) -> Op,
    ) -> Result<Var> {
        let (ia, ib, bcast) = self.binary(a, b, name)?;
        let va = &self.nodes[ia].value;
        let vb = self.nodes[ib].value.data();
        let n = vb.len();
        let data: Vec<f64> = va
            .data()
            .iter()
            .enumerate()
            .map(|(k, &x)| f(x, vb[if bcast { k % n } else { k }]))
            .collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        let rg = self.nodes[ia].requires_grad || self.nodes[ib].requires_grad;
        self.push(value, op(ia, ib, bcast), rg, name)
    }

    /// `a + b`; `b` may be a row vector broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, "add", |x, y| x + y, Op::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, "sub", |x, y| x - y, Op::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, "mul", |x, y| x * y, Op::Mul)
    }

    fn unary(&mut self, a: Var, name: &'static str, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        let ia = self.index(a)?;
        let value = self.nodes[ia].value.map(f);
        let rg = self.nodes[ia].requires_grad;
        self.push(value, op, rg, name)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let ia = self.index(a)?;
        self.unary(a, "scale", |x| c * x, Op::Scale(ia, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        let ia = self.index(a)?;
        self.unary(a, "add_scalar", |x| x + c, Op::AddScalar(ia))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        self.unary(a, "tanh", f64::tanh, Op::Tanh(ia))
    }

    pub fn silu(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        self.unary(a, "silu", |x| x / (1.0 + (-x).exp()), Op::Silu(ia))
    }

    pub fn leaky_relu(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        self.unary(
            a,
            "leaky_relu",
            |x| if x >= 0.0 { x } else { LEAKY_SLOPE * x },
            Op::LeakyRelu(ia),
        )
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        self.unary(a, "exp", f64::exp, Op::Exp(ia))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        let value = self.nodes[ia].value.matmul(&self.nodes[ib].value)?;
        let rg = self.nodes[ia].requires_grad || self.nodes[ib].requires_grad;
        self.push(value, Op::MatMul(ia, ib), rg, "matmul")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        let s = self.nodes[ia].value.data().iter().sum();
        let rg = self.nodes[ia].requires_grad;
        self.push(Tensor::scalar(s), Op::Sum(ia), rg, "sum")
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        let v = &self.nodes[ia].value;
        if v.is_empty() {
            return Err(Error::Usage("mean of an empty tensor".into()));
        }
        let s = v.data().iter().sum::<f64>() / v.len() as f64;
        let rg = self.nodes[ia].requires_grad;
        self.push(Tensor::scalar(s), Op::Mean(ia), rg, "mean")
    }

    /// Euclidean norm of the whole tensor.
    pub fn l2_norm(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        let s = self.nodes[ia].value.norm();
        let rg = self.nodes[ia].requires_grad;
        self.push(Tensor::scalar(s), Op::L2Norm(ia), rg, "l2_norm")
    }

    /// Concatenate 2-D tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let idx = parts.iter().map(|&p| self.index(p)).collect::<Result<Vec<_>>>()?;
        let first = idx.first().ok_or_else(|| Error::Usage("concat of nothing".into()))?;
        let rows = self.nodes[*first].value.rows();
        let mut total = 0;
        for &i in &idx {
            let v = &self.nodes[i].value;
            if v.ndim() != 2 || v.rows() != rows {
                return Err(Error::shape("concat_cols", self.nodes[*first].value.shape(), v.shape()));
            }
            total += v.cols();
        }
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &i in &idx {
                data.extend_from_slice(self.nodes[i].value.row(r));
            }
        }
        let rg = idx.iter().any(|&i| self.nodes[i].requires_grad);
        self.push(Tensor::matrix(rows, total, data)?, Op::ConcatCols(idx), rg, "concat_cols")
    }

    /// Select rows of a 2-D table (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, rows: &[usize]) -> Result<Var> {
        let it = self.index(table)?;
        let t = &self.nodes[it].value;
        if t.ndim() != 2 {
            return Err(Error::shape("gather_rows", t.shape(), &[rows.len()]));
        }
        let mut data = Vec::with_capacity(rows.len() * t.cols());
        for &r in rows {
            if r >= t.rows() {
                return Err(Error::Usage(format!("row {r} out of range for table {:?}", t.shape())));
            }
            data.extend_from_slice(t.row(r));
        }
        let value = Tensor::matrix(rows.len(), t.cols(), data)?;
        let rg = self.nodes[it].requires_grad;
        self.push(value, Op::GatherRows(it, rows.to_vec()), rg, "gather_rows")
    }

    /// Repeat a vector `[n]` into a `[rows, n]` matrix.
    pub fn broadcast_rows(&mut self, a: Var, rows: usize) -> Result<Var> {
        let ia = self.index(a)?;
        let v = &self.nodes[ia].value;
        if v.ndim() != 1 {
            return Err(Error::shape("broadcast_rows", v.shape(), &[rows]));
        }
        let n = v.len();
        let data = v.data().repeat(rows);
        let rg = self.nodes[ia].requires_grad;
        self.push(Tensor::matrix(rows, n, data)?, Op::BroadcastRows(ia), rg, "broadcast_rows")
    }

    /// Squared Euclidean distances between rows: `out[i][j] = |x_i - y_j|^2`.
    pub fn pairwise_sq_dist(&mut self, x: Var, y: Var) -> Result<Var> {
        let (ix, iy) = (self.index(x)?, self.index(y)?);
        let (vx, vy) = (&self.nodes[ix].value, &self.nodes[iy].value);
        if vx.ndim() != 2 || vy.ndim() != 2 || vx.cols() != vy.cols() {
            return Err(Error::shape("pairwise_sq_dist", vx.shape(), vy.shape()));
        }
        let (n, m) = (vx.rows(), vy.rows());
        let mut data = Vec::with_capacity(n * m);
        for i in 0..n {
            let xi = vx.row(i);
            for j in 0..m {
                data.push(xi.iter().zip(vy.row(j)).map(|(a, b)| (a - b) * (a - b)).sum());
            }
        }
        let rg = self.nodes[ix].requires_grad || self.nodes[iy].requires_grad;
        self.push(Tensor::matrix(n, m, data)?, Op::PairwiseSqDist(ix, iy), rg, "pairwise_sq_dist")
    }

    /// Row-wise log-softmax of a 2-D tensor.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let ia = self.index(a)?;
        let v = &self.nodes[ia].value;
        if v.ndim() != 2 {
            return Err(Error::shape("log_softmax", v.shape(), &[]));
        }
        let mut data = Vec::with_capacity(v.len());
        for r in 0..v.rows() {
            data.extend(log_softmax_row(v.row(r)));
        }
        let value = Tensor::new(v.shape().to_vec(), data)?;
        let rg = self.nodes[ia].requires_grad;
        self.push(value, Op::LogSoftmax(ia), rg, "log_softmax")
    }

    /// Accumulate `d(seed · output)/d(leaf)` into every `requires_grad` leaf.
    pub fn backward(&mut self, output: Var, seed: &Tensor) -> Result<()> {
        let out = self.index(output)?;
        if self.nodes[out].value.shape() != seed.shape() {
            return Err(Error::shape("backward seed", self.nodes[out].value.shape(), seed.shape()));
        }
        if !seed.is_finite() {
            return Err(Error::NonFinite("backward seed".into()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; out + 1];
        grads[out] = Some(seed.data().to_vec());

        for i in (0..=out).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                }
                &Op::Add(a, b, bc) => {
                    self.send(&mut grads, a, g.clone());
                    let gb = if bc { sum_rows(&g, self.nodes[b].value.len()) } else { g };
                    self.send(&mut grads, b, gb);
                }
                &Op::Sub(a, b, bc) => {
                    self.send(&mut grads, a, g.clone());
                    let gb = if bc { sum_rows(&g, self.nodes[b].value.len()) } else { g };
                    self.send(&mut grads, b, gb.into_iter().map(|v| -v).collect());
                }
                &Op::Mul(a, b, bc) => {
                    let va = self.nodes[a].value.data();
                    let vb = self.nodes[b].value.data();
                    let n = vb.len();
                    if self.nodes[a].requires_grad {
                        let ga = g
                            .iter()
                            .enumerate()
                            .map(|(k, gk)| gk * vb[if bc { k % n } else { k }])
                            .collect();
                        self.send(&mut grads, a, ga);
                    }
                    if self.nodes[b].requires_grad {
                        let prod: Vec<f64> = g.iter().zip(va).map(|(gk, ak)| gk * ak).collect();
                        let gb = if bc { sum_rows(&prod, n) } else { prod };
                        self.send(&mut grads, b, gb);
                    }
                }
                &Op::Scale(a, c) => {
                    self.send(&mut grads, a, g.into_iter().map(|v| c * v).collect());
                }
                &Op::AddScalar(a) => self.send(&mut grads, a, g),
                &Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a].value, &self.nodes[b].value);
                    let (m, k, n) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
                    if self.nodes[a].requires_grad {
                        let mut ga = vec![0.0; m * k];
                        gemm(m, n, k, &g, false, vb.data(), true, &mut ga);
                        self.send(&mut grads, a, ga);
                    }
                    if self.nodes[b].requires_grad {
                        let mut gb = vec![0.0; k * n];
                        gemm(k, m, n, va.data(), true, &g, false, &mut gb);
                        self.send(&mut grads, b, gb);
                    }
                }
                &Op::Sum(a) => {
                    let n = self.nodes[a].value.len();
                    self.send(&mut grads, a, vec![g[0]; n]);
                }
                &Op::Mean(a) => {
                    let n = self.nodes[a].value.len();
                    self.send(&mut grads, a, vec![g[0] / n as f64; n]);
                }
                &Op::L2Norm(a) => {
                    let norm = node.value.item();
                    let va = self.nodes[a].value.data();
                    let ga = if norm > 0.0 {
                        va.iter().map(|x| g[0] * x / norm).collect()
                    } else {
                        vec![0.0; va.len()]
                    };
                    self.send(&mut grads, a, ga);
                }
                &Op::Tanh(a) => {
                    let y = node.value.data();
                    let ga = g.iter().zip(y).map(|(gk, yk)| gk * (1.0 - yk * yk)).collect();
                    self.send(&mut grads, a, ga);
                }
                &Op::Silu(a) => {
                    let x = self.nodes[a].value.data();
                    let ga = g
                        .iter()
                        .zip(x)
                        .map(|(gk, &xk)| {
                            let s = 1.0 / (1.0 + (-xk).exp());
                            gk * s * (1.0 + xk * (1.0 - s))
                        })
                        .collect();
                    self.send(&mut grads, a, ga);
                }
                &Op::LeakyRelu(a) => {
                    let x = self.nodes[a].value.data();
                    let ga = g
                        .iter()
                        .zip(x)
                        .map(|(gk, &xk)| if xk >= 0.0 { *gk } else { LEAKY_SLOPE * gk })
                        .collect();
                    self.send(&mut grads, a, ga);
                }
                &Op::Exp(a) => {
                    let y = node.value.data();
                    let ga = g.iter().zip(y).map(|(gk, yk)| gk * yk).collect();
                    self.send(&mut grads, a, ga);
                }
                Op::ConcatCols(parts) => {
                    let rows = node.value.rows();
                    let total = node.value.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.nodes[p].value.cols();
                        if self.nodes[p].requires_grad {
                            let mut gp = Vec::with_capacity(rows * c);
                            for r in 0..rows {
                                gp.extend_from_slice(&g[r * total + offset..r * total + offset + c]);
                            }
                            self.send(&mut grads, p, gp);
                        }
                        offset += c;
                    }
                }
                Op::GatherRows(t, rows) => {
                    let table = &self.nodes[*t].value;
                    let c = table.cols();
                    let mut gt = vec![0.0; table.len()];
                    for (k, &r) in rows.iter().enumerate() {
                        for j in 0..c {
                            gt[r * c + j] += g[k * c + j];
                        }
                    }
                    self.send(&mut grads, *t, gt);
                }
                &Op::BroadcastRows(a) => {
                    let n = self.nodes[a].value.len();
                    self.send(&mut grads, a, sum_rows(&g, n));
                }
                &Op::PairwiseSqDist(x, y) => {
                    let (vx, vy) = (&self.nodes[x].value, &self.nodes[y].value);
                    let (n, m, d) = (vx.rows(), vy.rows(), vx.cols());
                    let mut gx = vec![0.0; n * d];
                    let mut gy = vec![0.0; m * d];
                    for i in 0..n {
                        for j in 0..m {
                            let gij = 2.0 * g[i * m + j];
                            if gij == 0.0 {
                                continue;
                            }
                            for l in 0..d {
                                let diff = vx.data()[i * d + l] - vy.data()[j * d + l];
                                gx[i * d + l] += gij * diff;
                                gy[j * d + l] -= gij * diff;
                            }
                        }
                    }
                    if self.nodes[x].requires_grad {
                        self.send(&mut grads, x, gx);
                    }
                    if self.nodes[y].requires_grad {
                        self.send(&mut grads, y, gy);
                    }
                }
                &Op::LogSoftmax(a) => {
                    let y = &node.value;
                    let c = y.cols();
                    let mut ga = vec![0.0; y.len()];
                    for r in 0..y.rows() {
                        let gs: f64 = g[r * c..(r + 1) * c].iter().sum();
                        for j in 0..c {
                            let k = r * c + j;
                            ga[k] = g[k] - y.data()[k].exp() * gs;
                        }
                    }
                    self.send(&mut grads, a, ga);
                }
            }
        }

        for (i, g) in grads.into_iter().enumerate() {
            let Some(g) = g else { continue };
            let node = &mut self.nodes[i];
            if !matches!(node.op, Op::Leaf) || !node.requires_grad {
                continue;
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("backward".into()));
            }
            match &mut node.grad {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => node.grad = Some(g),
            }
        }
        Ok(())
    }

    fn send(&self, grads: &mut [Option<Vec<f64>>], to: usize, g: Vec<f64>) {
        if !self.nodes[to].requires_grad {
            return;
        }
        match &mut grads[to] {
            Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
            slot @ None => *slot = Some(g),
        }
    }
}

fn sum_rows(g: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for chunk in g.chunks(n) {
        out.iter_mut().zip(chunk).for_each(|(o, v)| *o += v);
    }
    out
}

pub(crate) fn log_softmax_row(row: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(move |v| v - lse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative_at_three() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0)).unwrap();
        let y = tape.mul(x, x).unwrap();
        tape.backward(y, &Tensor::scalar(1.0)).unwrap();
        assert_eq!(tape.grad(x).unwrap().item(), 6.0);
    }

    #[test]
    fn gradients_accumulate_across_calls() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(5.0)).unwrap();
        let y = tape.scale(x, 2.0).unwrap();
        tape.backward(y, &Tensor::scalar(1.0)).unwrap();
        assert_eq!(tape.grad(x).unwrap().item(), 2.0);
        tape.backward(y, &Tensor::scalar(1.0)).unwrap();
        assert_eq!(tape.grad(x).unwrap().item(), 4.0);
        tape.zero_grad();
        assert!(tape.grad(x).is_none());
    }

    #[test]
    fn foreign_variable_is_rejected() {
        let mut a = Tape::new();
        let mut b = Tape::new();
        let x = a.param(Tensor::scalar(1.0)).unwrap();
        let _ = b.param(Tensor::scalar(1.0)).unwrap();
        assert!(matches!(b.backward(x, &Tensor::scalar(1.0)), Err(Error::Usage(_))));
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3])).unwrap();
        let b = tape.constant(Tensor::zeros(&[4, 3])).unwrap();
        let err = tape.matmul(a, b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[4, 3]"), "{err}");
        assert!(tape.add(a, b).is_err());
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::scalar(1000.0)).unwrap();
        assert!(matches!(tape.exp(a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn unreached_leaf_has_no_grad_and_constants_never_do() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(1.0)).unwrap();
        let unused = tape.param(Tensor::scalar(1.0)).unwrap();
        let c = tape.constant(Tensor::scalar(2.0)).unwrap();
        let y = tape.mul(x, c).unwrap();
        tape.backward(y, &Tensor::scalar(1.0)).unwrap();
        assert!(tape.grad(unused).is_none());
        assert!(tape.grad(c).is_none());
        assert_eq!(tape.grad(x).unwrap().item(), 2.0);
    }

    #[test]
    fn broadcast_add_sums_over_rows() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::zeros(&[3, 2])).unwrap();
        let b = tape.param(Tensor::vector(vec![1.0, 2.0])).unwrap();
        let y = tape.add(a, b).unwrap();
        assert_eq!(tape.value(y).row(2), &[1.0, 2.0]);
        tape.backward(y, &Tensor::full(&[3, 2], 1.0)).unwrap();
        assert_eq!(tape.grad(b).unwrap().data(), &[3.0, 3.0]);
    }
}
