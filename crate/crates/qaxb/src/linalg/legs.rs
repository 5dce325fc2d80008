//! Leg numbering: an operator acting on some tensor factors of ℋ₁⊗ℋ₂⊗…,
//! identity on the rest. Legs are numbered from 1 and the first leg is the
//! slowest-varying index.

use super::op::{LinOp, Operator};
use super::LinalgError;
use crate::C64;

pub struct LegOp {
    op: LinOp,
    total: usize,
    inner: Vec<usize>,
    outer: Vec<usize>,
}

fn offsets(dims: &[usize], strides: &[usize], legs: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &l in legs {
        let mut next = Vec::with_capacity(out.len() * dims[l]);
        for &o in &out {
            for i in 0..dims[l] {
                next.push(o + i * strides[l]);
            }
        }
        out = next;
    }
    out
}

/// `op` acting on `legs` (in the order listed) of a space with factor dimensions `dims`.
pub fn leg_embed(op: &LinOp, legs: &[usize], dims: &[usize]) -> Result<LegOp, LinalgError> {
    let n = dims.len();
    let mut seen = vec![false; n];
    for &l in legs {
        if l == 0 || l > n || seen[l - 1] {
            return Err(LinalgError::Legs(format!("leg {l} invalid or repeated for {n} factors")));
        }
        seen[l - 1] = true;
    }
    let sel: usize = legs.iter().map(|&l| dims[l - 1]).product();
    if sel != op.dim() {
        return Err(LinalgError::Dimension { expected: sel, got: op.dim() });
    }
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let zero: Vec<usize> = legs.iter().map(|l| l - 1).collect();
    let rest: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
    Ok(LegOp {
        op: op.clone(),
        total: dims.iter().product(),
        inner: offsets(dims, &strides, &zero),
        outer: offsets(dims, &strides, &rest),
    })
}

impl LegOp {
    fn run(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        assert_eq!(x.len(), self.total, "dimension mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.total];
        let mut buf = vec![C64::new(0.0, 0.0); self.inner.len()];
        for &o in &self.outer {
            for (b, &i) in buf.iter_mut().zip(&self.inner) {
                *b = x[o + i];
            }
            let y = if adjoint { self.op.apply_adjoint(&buf) } else { self.op.apply(&buf) };
            for (v, &i) in y.iter().zip(&self.inner) {
                out[o + i] = *v;
            }
        }
        out
    }

    pub fn into_linop(self) -> LinOp {
        LinOp::free(self)
    }
}

impl Operator for LegOp {
    fn dim(&self) -> usize {
        self.total
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.run(x, false)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.run(x, true)
    }
}
