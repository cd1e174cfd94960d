//! Define-by-run reverse-mode differentiation.
//!
//! Every operation appends a node to a [`Tape`]; [`Tape::backward`] walks the
//! nodes in reverse and accumulates gradients by the chain rule. The tape is
//! rebuilt on every training iteration — the networks here are small and
//! static, so there is no graph caching.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Var(u32);

impl Var {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

/// How a constant factor is broadcast in [`Op::MulConst`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Broadcast {
    /// Factor has the same shape as the operand.
    Full,
    /// Factor is a vector applied to every row of a rank-2 operand.
    PerCol,
    /// Factor is a vector scaling each row of a rank-2 operand.
    PerRow,
}

enum Op<T: Scalar> {
    Leaf,
    /// `y = x @ w (+ b)`; `x: [n, i]`, `w: [i, o]`, `b: [o]`.
    Affine { x: Var, w: Var, b: Option<Var> },
    /// `y = x @ m` for a constant matrix `m` (fixed basis expansion).
    MatmulConst { x: Var, m: Tensor<T> },
    Relu { x: Var },
    Abs { x: Var },
    Neg { x: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Div { a: Var, b: Var },
    AddScalar { x: Var },
    MulScalar { x: Var, c: T },
    MulConst { x: Var, m: Tensor<T>, bcast: Broadcast },
    SumAll { x: Var },
    MeanAll { x: Var },
    SumAxis { x: Var, axis: usize },
    MeanAxis { x: Var, axis: usize },
    Concat { parts: Vec<Var>, axis: usize },
    Slice { x: Var, axis: usize, start: usize },
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Gradients produced by one [`Tape::backward`] call, indexed by [`Var`].
pub struct Gradients<T: Scalar> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the loss with respect to `v`, if `v` influenced the loss.
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads[v.idx()].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads[v.idx()].take()
    }
}

/// Append-only record of a forward computation.
pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a recorded variable.
    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.idx()].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var((self.nodes.len() - 1) as u32)
    }

    /// Record an input or parameter. Leaves are where gradients land.
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Fully connected layer `x @ w (+ b)`. The bias is optional; the
    /// parallel trick relies on bias-free input layers mapping zero to zero.
    pub fn affine(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.rank() != 2 || wv.rank() != 2 || xv.cols() != wv.rows() {
            return Err(Error::ShapeMismatch {
                op: "affine",
                lhs: xv.shape().to_vec(),
                rhs: wv.shape().to_vec(),
            });
        }
        let (n, o) = (xv.rows(), wv.cols());
        let mut out = xv.matmul(wv)?;
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.len() != o {
                return Err(Error::ShapeMismatch {
                    op: "affine bias",
                    lhs: vec![n, o],
                    rhs: bv.shape().to_vec(),
                });
            }
            let bias = bv.clone();
            let data = out.data_mut();
            for r in 0..n {
                for (c, &bc) in bias.data().iter().enumerate() {
                    data[r * o + c] += bc;
                }
            }
        }
        Ok(self.push(out, Op::Affine { x, w, b }))
    }

    /// `x @ m` against a constant (non-learnable) matrix.
    pub fn matmul_const(&mut self, x: Var, m: &Tensor<T>) -> Result<Var> {
        let out = self.value(x).matmul(m)?;
        Ok(self.push(out, Op::MatmulConst { x, m: m.clone() }))
    }

    /// Elementwise `max(0, x)`; the subgradient at 0 is taken as 0.
    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| if v > T::zero() { v } else { T::zero() });
        self.push(out, Op::Relu { x })
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let out = self.value(x).abs();
        self.push(out, Op::Abs { x })
    }

    pub fn neg(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| -v);
        self.push(out, Op::Neg { x })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        Ok(self.push(out, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).sub(self.value(b))?;
        Ok(self.push(out, Op::Sub { a, b }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).mul(self.value(b))?;
        Ok(self.push(out, Op::Mul { a, b }))
    }

    /// Elementwise division. Callers are responsible for keeping the
    /// denominator away from zero; the loss builders add an epsilon to
    /// absolute denominators before dividing.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).div(self.value(b))?;
        Ok(self.push(out, Op::Div { a, b }))
    }

    pub fn add_scalar(&mut self, x: Var, c: T) -> Var {
        let out = self.value(x).map(|v| v + c);
        self.push(out, Op::AddScalar { x })
    }

    pub fn mul_scalar(&mut self, x: Var, c: T) -> Var {
        let out = self.value(x).scale(c);
        self.push(out, Op::MulScalar { x, c })
    }

    /// Multiply by a constant tensor: either the same shape as `x`, or a
    /// vector broadcast over the rows of a rank-2 `x` (one factor per column).
    pub fn mul_const(&mut self, x: Var, m: &Tensor<T>) -> Result<Var> {
        let xv = self.value(x);
        let (out, bcast) = if m.shape() == xv.shape() {
            (xv.mul(m)?, Broadcast::Full)
        } else if xv.rank() == 2 && m.rank() == 1 && m.len() == xv.cols() {
            let cols = xv.cols();
            let mut out = xv.clone();
            let data = out.data_mut();
            for (i, v) in data.iter_mut().enumerate() {
                *v = *v * m.data()[i % cols];
            }
            (out, Broadcast::PerCol)
        } else {
            return Err(Error::ShapeMismatch {
                op: "mul_const",
                lhs: xv.shape().to_vec(),
                rhs: m.shape().to_vec(),
            });
        };
        Ok(self.push(out, Op::MulConst { x, m: m.clone(), bcast }))
    }

    /// Zero out entries of `x` where the mask is 0. The mask must contain
    /// only zeros and ones; gradients flow through unmasked entries only.
    pub fn mask(&mut self, x: Var, m: &Tensor<T>) -> Result<Var> {
        debug_assert!(
            m.data().iter().all(|&v| v == T::zero() || v == T::one()),
            "mask entries must be 0 or 1"
        );
        self.mul_const(x, m)
    }

    /// Scale row `i` of a rank-2 `x` by `v[i]` (constant factors).
    pub fn scale_rows(&mut self, x: Var, v: &Tensor<T>) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 2 || v.rank() != 1 || v.len() != xv.rows() {
            return Err(Error::ShapeMismatch {
                op: "scale_rows",
                lhs: xv.shape().to_vec(),
                rhs: v.shape().to_vec(),
            });
        }
        let cols = xv.cols();
        let mut out = xv.clone();
        let data = out.data_mut();
        for (i, val) in data.iter_mut().enumerate() {
            *val = *val * v.data()[i / cols];
        }
        Ok(self.push(
            out,
            Op::MulConst {
                x,
                m: v.clone(),
                bcast: Broadcast::PerRow,
            },
        ))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let out = Tensor::scalar(self.value(x).sum());
        self.push(out, Op::SumAll { x })
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let out = Tensor::scalar(self.value(x).mean());
        self.push(out, Op::MeanAll { x })
    }

    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let out = self.value(x).sum_axis(axis)?;
        Ok(self.push(out, Op::SumAxis { x, axis }))
    }

    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let out = self.value(x).mean_axis(axis)?;
        Ok(self.push(out, Op::MeanAxis { x, axis }))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let tensors: Vec<&Tensor<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let out = Tensor::concat(&tensors, axis)?;
        Ok(self.push(
            out,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
        ))
    }

    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let out = self.value(x).slice_axis(axis, start, len)?;
        Ok(self.push(out, Op::Slice { x, axis, start }))
    }

    /// Propagate gradients from a scalar loss back to every reachable node.
    /// Each call starts from fresh (zero) gradient buffers.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let loss_val = self.value(loss);
        if !loss_val.is_scalar() {
            return Err(Error::NonScalarLoss {
                shape: loss_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.idx()] = Some(Tensor::scalar(T::one()));

        for idx in (0..self.nodes.len()).rev() {
            let Some(g) = grads[idx].clone() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Affine { x, w, b } => {
                    let xv = self.value(*x).clone();
                    let wv = self.value(*w).clone();
                    let (n, i, o) = (xv.rows(), xv.cols(), wv.cols());
                    {
                        let gx = ensure(&mut grads, *x, xv.shape());
                        T::gemm(
                            false,
                            true,
                            n,
                            o,
                            i,
                            T::one(),
                            g.data(),
                            wv.data(),
                            T::one(),
                            gx.data_mut(),
                        );
                    }
                    {
                        let gw = ensure(&mut grads, *w, wv.shape());
                        T::gemm(
                            true,
                            false,
                            i,
                            n,
                            o,
                            T::one(),
                            xv.data(),
                            g.data(),
                            T::one(),
                            gw.data_mut(),
                        );
                    }
                    if let Some(b) = b {
                        let gb = ensure(&mut grads, *b, &[o]);
                        let gbd = gb.data_mut();
                        for r in 0..n {
                            for c in 0..o {
                                gbd[c] += g.data()[r * o + c];
                            }
                        }
                    }
                }
                Op::MatmulConst { x, m } => {
                    let (n, d, o) = (self.value(*x).rows(), m.rows(), m.cols());
                    let gx = ensure(&mut grads, *x, &[n, d]);
                    T::gemm(
                        false,
                        true,
                        n,
                        o,
                        d,
                        T::one(),
                        g.data(),
                        m.data(),
                        T::one(),
                        gx.data_mut(),
                    );
                }
                Op::Relu { x } => {
                    let xv = self.value(*x).clone();
                    accumulate(&mut grads, *x, |gx| {
                        for ((gv, &xval), &gu) in
                            gx.iter_mut().zip(xv.data().iter()).zip(g.data().iter())
                        {
                            if xval > T::zero() {
                                *gv += gu;
                            }
                        }
                    }, xv.shape());
                }
                Op::Abs { x } => {
                    let xv = self.value(*x).clone();
                    accumulate(&mut grads, *x, |gx| {
                        for ((gv, &xval), &gu) in
                            gx.iter_mut().zip(xv.data().iter()).zip(g.data().iter())
                        {
                            if xval > T::zero() {
                                *gv += gu;
                            } else if xval < T::zero() {
                                *gv -= gu;
                            }
                        }
                    }, xv.shape());
                }
                Op::Neg { x } => {
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, |gx| {
                        for (gv, &gu) in gx.iter_mut().zip(g.data().iter()) {
                            *gv -= gu;
                        }
                    }, &shape);
                }
                Op::Add { a, b } => {
                    for side in [a, b] {
                        let shape = self.value(*side).shape().to_vec();
                        accumulate(&mut grads, *side, |gs| {
                            for (gv, &gu) in gs.iter_mut().zip(g.data().iter()) {
                                *gv += gu;
                            }
                        }, &shape);
                    }
                }
                Op::Sub { a, b } => {
                    let sa = self.value(*a).shape().to_vec();
                    accumulate(&mut grads, *a, |gs| {
                        for (gv, &gu) in gs.iter_mut().zip(g.data().iter()) {
                            *gv += gu;
                        }
                    }, &sa);
                    let sb = self.value(*b).shape().to_vec();
                    accumulate(&mut grads, *b, |gs| {
                        for (gv, &gu) in gs.iter_mut().zip(g.data().iter()) {
                            *gv -= gu;
                        }
                    }, &sb);
                }
                Op::Mul { a, b } => {
                    let av = self.value(*a).clone();
                    let bv = self.value(*b).clone();
                    accumulate(&mut grads, *a, |gs| {
                        for ((gv, &gu), &other) in
                            gs.iter_mut().zip(g.data().iter()).zip(bv.data().iter())
                        {
                            *gv += gu * other;
                        }
                    }, av.shape());
                    accumulate(&mut grads, *b, |gs| {
                        for ((gv, &gu), &other) in
                            gs.iter_mut().zip(g.data().iter()).zip(av.data().iter())
                        {
                            *gv += gu * other;
                        }
                    }, bv.shape());
                }
                Op::Div { a, b } => {
                    let av = self.value(*a).clone();
                    let bv = self.value(*b).clone();
                    accumulate(&mut grads, *a, |gs| {
                        for ((gv, &gu), &den) in
                            gs.iter_mut().zip(g.data().iter()).zip(bv.data().iter())
                        {
                            *gv += gu / den;
                        }
                    }, av.shape());
                    accumulate(&mut grads, *b, |gs| {
                        for (i, gv) in gs.iter_mut().enumerate() {
                            let den = bv.data()[i];
                            *gv -= g.data()[i] * av.data()[i] / (den * den);
                        }
                    }, bv.shape());
                }
                Op::AddScalar { x } => {
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, |gs| {
                        for (gv, &gu) in gs.iter_mut().zip(g.data().iter()) {
                            *gv += gu;
                        }
                    }, &shape);
                }
                Op::MulScalar { x, c } => {
                    let c = *c;
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, |gs| {
                        for (gv, &gu) in gs.iter_mut().zip(g.data().iter()) {
                            *gv += gu * c;
                        }
                    }, &shape);
                }
                Op::MulConst { x, m, bcast } => {
                    let m = m.clone();
                    let bcast = *bcast;
                    let shape = self.value(*x).shape().to_vec();
                    let cols = if shape.len() == 2 { shape[1] } else { 0 };
                    accumulate(&mut grads, *x, |gs| match bcast {
                        Broadcast::Full => {
                            for ((gv, &gu), &f) in
                                gs.iter_mut().zip(g.data().iter()).zip(m.data().iter())
                            {
                                *gv += gu * f;
                            }
                        }
                        Broadcast::PerCol => {
                            for (i, gv) in gs.iter_mut().enumerate() {
                                *gv += g.data()[i] * m.data()[i % cols];
                            }
                        }
                        Broadcast::PerRow => {
                            for (i, gv) in gs.iter_mut().enumerate() {
                                *gv += g.data()[i] * m.data()[i / cols];
                            }
                        }
                    }, &shape);
                }
                Op::SumAll { x } => {
                    let gu = g.item();
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, |gs| {
                        for gv in gs.iter_mut() {
                            *gv += gu;
                        }
                    }, &shape);
                }
                Op::MeanAll { x } => {
                    let shape = self.value(*x).shape().to_vec();
                    let gu = g.item() / T::from_f64(shape.iter().product::<usize>() as f64);
                    accumulate(&mut grads, *x, |gs| {
                        for gv in gs.iter_mut() {
                            *gv += gu;
                        }
                    }, &shape);
                }
                Op::SumAxis { x, axis } | Op::MeanAxis { x, axis } => {
                    let shape = self.value(*x).shape().to_vec();
                    let outer: usize = shape[..*axis].iter().product();
                    let mid = shape[*axis];
                    let inner: usize = shape[*axis + 1..].iter().product();
                    let scale = if matches!(node.op, Op::MeanAxis { .. }) {
                        T::one() / T::from_f64(mid as f64)
                    } else {
                        T::one()
                    };
                    accumulate(&mut grads, *x, |gs| {
                        for o in 0..outer {
                            for m in 0..mid {
                                let base = o * mid * inner + m * inner;
                                for i in 0..inner {
                                    gs[base + i] += g.data()[o * inner + i] * scale;
                                }
                            }
                        }
                    }, &shape);
                }
                Op::Concat { parts, axis } => {
                    let parts = parts.clone();
                    let axis = *axis;
                    let mut start = 0;
                    for p in parts {
                        let pv_shape = self.value(p).shape().to_vec();
                        let len = pv_shape[axis];
                        let piece = g.slice_axis(axis, start, len)?;
                        accumulate(&mut grads, p, |gs| {
                            for (gv, &gu) in gs.iter_mut().zip(piece.data().iter()) {
                                *gv += gu;
                            }
                        }, &pv_shape);
                        start += len;
                    }
                }
                Op::Slice { x, axis, start } => {
                    let shape = self.value(*x).shape().to_vec();
                    let outer: usize = shape[..*axis].iter().product();
                    let mid = shape[*axis];
                    let inner: usize = shape[*axis + 1..].iter().product();
                    let len = g.shape()[*axis];
                    let start = *start;
                    accumulate(&mut grads, *x, |gs| {
                        for o in 0..outer {
                            let src = o * len * inner;
                            let dst = o * mid * inner + start * inner;
                            for i in 0..len * inner {
                                gs[dst + i] += g.data()[src + i];
                            }
                        }
                    }, &shape);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Get-or-create the gradient buffer for `v`.
fn ensure<'g, T: Scalar>(
    grads: &'g mut [Option<Tensor<T>>],
    v: Var,
    shape: &[usize],
) -> &'g mut Tensor<T> {
    let slot = &mut grads[v.idx()];
    if slot.is_none() {
        *slot = Some(Tensor::zeros(shape));
    }
    slot.as_mut().unwrap()
}

fn accumulate<T: Scalar>(
    grads: &mut [Option<Tensor<T>>],
    v: Var,
    f: impl FnOnce(&mut [T]),
    shape: &[usize],
) {
    let buf = ensure(grads, v, shape);
    f(buf.data_mut());
}
