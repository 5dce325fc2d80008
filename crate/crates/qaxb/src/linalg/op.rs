use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinalgError;
use crate::C64;

/// Largest dimension materialized as a dense matrix.
pub const DENSE_LIMIT: usize = 4096;

/// A matrix-free linear operator together with its adjoint.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64>;
}

#[derive(Clone)]
pub enum LinOp {
    Dense(DMatrix<C64>),
    Free(Arc<dyn Operator>),
}

impl fmt::Debug for LinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinOp::Dense(m) => write!(f, "LinOp::Dense({}x{})", m.nrows(), m.ncols()),
            LinOp::Free(o) => write!(f, "LinOp::Free(dim {})", o.dim()),
        }
    }
}

impl From<DMatrix<C64>> for LinOp {
    fn from(m: DMatrix<C64>) -> Self {
        LinOp::Dense(m)
    }
}

impl LinOp {
    pub fn free(op: impl Operator + 'static) -> Self {
        LinOp::Free(Arc::new(op))
    }

    pub fn identity(n: usize) -> Self {
        LinOp::free(DiagOp::new(vec![C64::new(1.0, 0.0); n]))
    }

    pub fn diagonal(d: Vec<C64>) -> Self {
        LinOp::free(DiagOp::new(d))
    }

    pub fn from_fns<F, G>(dim: usize, f: F, fa: G) -> Self
    where
        F: Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static,
        G: Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static,
    {
        LinOp::free(FnOp { dim, f: Box::new(f), fa: Box::new(fa) })
    }

    pub fn dim(&self) -> usize {
        match self {
            LinOp::Dense(m) => m.nrows(),
            LinOp::Free(o) => o.dim(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, LinOp::Dense(_))
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match self {
            LinOp::Dense(m) => dense_apply(m, x, false),
            LinOp::Free(o) => o.apply(x),
        }
    }

    pub fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        match self {
            LinOp::Dense(m) => dense_apply(m, x, true),
            LinOp::Free(o) => o.apply_adjoint(x),
        }
    }

    pub fn try_apply(&self, x: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if x.len() != self.dim() {
            return Err(LinalgError::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(self.apply(x))
    }

    pub fn adjoint(&self) -> LinOp {
        match self {
            LinOp::Dense(m) => LinOp::Dense(m.adjoint()),
            LinOp::Free(o) => LinOp::Free(Arc::new(Adjoint(o.clone()))),
        }
    }

    /// self ∘ other
    pub fn compose(&self, other: &LinOp) -> Result<LinOp, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(match (self, other) {
            (LinOp::Dense(a), LinOp::Dense(b)) => LinOp::Dense(a * b),
            _ => LinOp::free(Product(vec![self.clone(), other.clone()])),
        })
    }

    pub fn product(ops: &[LinOp]) -> Result<LinOp, LinalgError> {
        let n = ops.first().map(|o| o.dim()).unwrap_or(0);
        if let Some(bad) = ops.iter().find(|o| o.dim() != n) {
            return Err(LinalgError::Dimension { expected: n, got: bad.dim() });
        }
        Ok(LinOp::free(Product(ops.to_vec())))
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>, LinalgError> {
        match self {
            LinOp::Dense(m) => Ok(m.clone()),
            LinOp::Free(o) => {
                let n = o.dim();
                if n > DENSE_LIMIT {
                    return Err(LinalgError::TooLarge(n));
                }
                let mut m = DMatrix::zeros(n, n);
                let mut e = vec![C64::new(0.0, 0.0); n];
                for j in 0..n {
                    e[j] = C64::new(1.0, 0.0);
                    let col = o.apply(&e);
                    m.set_column(j, &DVector::from_vec(col));
                    e[j] = C64::new(0.0, 0.0);
                }
                Ok(m)
            }
        }
    }

    /// max |⟨Aφ,ψ⟩ − ⟨φ,A*ψ⟩| over random unit probes.
    pub fn adjoint_consistency(&self, probes: usize, seed: u64) -> f64 {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0f64;
        for _ in 0..probes {
            let a = random_unit(n, &mut rng);
            let b = random_unit(n, &mut rng);
            let lhs = inner(&self.apply(&a), &b);
            let rhs = inner(&a, &self.apply_adjoint(&b));
            worst = worst.max((lhs - rhs).norm());
        }
        worst
    }
}

pub(crate) fn dense_apply(m: &DMatrix<C64>, x: &[C64], adjoint: bool) -> Vec<C64> {
    assert_eq!(m.ncols(), x.len(), "dimension mismatch");
    let v = DVector::from_column_slice(x);
    let y = if adjoint { m.ad_mul(&v) } else { m * v };
    y.as_slice().to_vec()
}

/// ⟨a, b⟩, antilinear in the first slot.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn random_unit(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub struct DiagOp {
    d: Vec<C64>,
}

impl DiagOp {
    pub fn new(d: Vec<C64>) -> Self {
        DiagOp { d }
    }
}

impl Operator for DiagOp {
    fn dim(&self) -> usize {
        self.d.len()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        x.iter().zip(&self.d).map(|(a, b)| a * b).collect()
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        x.iter().zip(&self.d).map(|(a, b)| a * b.conj()).collect()
    }
}

struct Adjoint(Arc<dyn Operator>);

impl Operator for Adjoint {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.0.apply_adjoint(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.0.apply(x)
    }
}

// ops[0] ∘ ops[1] ∘ ...
struct Product(Vec<LinOp>);

impl Operator for Product {
    fn dim(&self) -> usize {
        self.0[0].dim()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.0.iter().rev().fold(x.to_vec(), |v, o| o.apply(&v))
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.0.iter().fold(x.to_vec(), |v, o| o.apply_adjoint(&v))
    }
}

type VecFn = Box<dyn Fn(&[C64]) -> Vec<C64> + Send + Sync>;

struct FnOp {
    dim: usize,
    f: VecFn,
    fa: VecFn,
}

impl Operator for FnOp {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (self.f)(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        (self.fa)(x)
    }
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

pub fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]))
}

pub fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_free_agree() {
        let m = DMatrix::from_fn(5, 5, |i, j| C64::new(i as f64 - j as f64, (i * j) as f64 * 0.1));
        let d = LinOp::Dense(m.clone());
        let f = LinOp::from_fns(5, move |x| dense_apply(&m, x, false), {
            let m2 = d.to_dense().unwrap();
            move |x| dense_apply(&m2, x, true)
        });
        assert!(f.adjoint_consistency(10, 1) < 1e-12);
        assert_eq!(f.to_dense().unwrap(), d.to_dense().unwrap());
        let p = d.compose(&f).unwrap().to_dense().unwrap();
        let want = d.to_dense().unwrap() * d.to_dense().unwrap();
        assert!((p - want).norm() < 1e-12);
    }

    #[test]
    fn compose_checks_dimensions() {
        assert!(LinOp::identity(3).compose(&LinOp::identity(4)).is_err());
        assert!(LinOp::identity(3).try_apply(&[C64::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn kron_of_paulis() {
        let k = kron(&pauli_z(), &pauli_x());
        assert_eq!(k[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(k[(2, 3)], C64::new(-1.0, 0.0));
        assert_eq!(k[(0, 2)], C64::new(0.0, 0.0));
    }
}

/// C = A·B for row-major A (m×k) and B (k×n).
pub fn gemm(m: usize, k: usize, n: usize, a: &[C64], b: &[C64], c: &mut [C64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: Complex64 is repr(C) with layout [re, im], matching [f64; 2], and
    // the bounds above cover every strided access.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}
