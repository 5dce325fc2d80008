use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::op::LinOp;
use super::LinalgError;
use crate::C64;

const SA_TOL: f64 = 1e-10;
const PAIR_TOL: f64 = 1e-8;

/// ‖T − T*‖_F / ‖T‖_F (0 for T = 0).
pub fn asymmetry(m: &DMatrix<C64>) -> f64 {
    let n = m.norm();
    if n == 0.0 {
        0.0
    } else {
        (m - m.adjoint()).norm() / n
    }
}

fn is_diagonal(m: &DMatrix<C64>) -> bool {
    m.iter().enumerate().all(|(k, v)| k / m.nrows() == k % m.nrows() || *v == C64::new(0.0, 0.0))
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if is_diagonal(m) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re));
        let vals = idx.iter().map(|&i| m[(i, i)].re).collect();
        let vecs = DMatrix::from_fn(n, n, |i, j| if i == idx[j] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        return (vals, vecs);
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let e = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, idx[j])]);
    (vals, vecs)
}

fn dense_selfadjoint(t: &LinOp, tol: f64) -> Result<DMatrix<C64>, LinalgError> {
    let m = t.to_dense()?;
    let a = asymmetry(&m);
    if a > tol {
        return Err(LinalgError::NotSelfadjoint(a));
    }
    Ok(m)
}

fn from_spectrum<F: FnMut(f64) -> C64>(vals: &[f64], vecs: &DMatrix<C64>, mut f: F) -> DMatrix<C64> {
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v)));
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * d[j]);
    scaled * vecs.adjoint()
}

/// f(T) for selfadjoint T.
pub fn func_calc(t: &LinOp, f: impl Fn(f64) -> C64) -> Result<LinOp, LinalgError> {
    let m = dense_selfadjoint(t, SA_TOL)?;
    if is_diagonal(&m) {
        let d = DVector::from_iterator(m.nrows(), (0..m.nrows()).map(|i| f(m[(i, i)].re)));
        return Ok(LinOp::Dense(DMatrix::from_diagonal(&d)));
    }
    let (vals, vecs) = hermitian_eigen(&m);
    Ok(LinOp::Dense(from_spectrum(&vals, &vecs, f)))
}

/// (I + X*X)^{∓1/2} style helper: g applied to X*X.
fn gram_function(x: &DMatrix<C64>, g: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let gram = x.adjoint() * x;
    let (vals, vecs) = hermitian_eigen(&gram);
    from_spectrum(&vals, &vecs, |v| C64::new(g(v.max(0.0)), 0.0))
}

/// z_T = T(I + T*T)^{−1/2}.
pub fn z_transform(t: &LinOp) -> Result<LinOp, LinalgError> {
    let m = t.to_dense()?;
    Ok(LinOp::Dense(&m * gram_function(&m, |v| 1.0 / (1.0 + v).sqrt())))
}

/// T = Z(I − Z*Z)^{−1/2}, requiring ‖Z‖ < 1 − 10⁻⁸.
pub fn inverse_z(z: &LinOp) -> Result<LinOp, LinalgError> {
    let m = z.to_dense()?;
    let top = m.clone().singular_values().iter().cloned().fold(0.0, f64::max);
    if top >= 1.0 - 1e-8 {
        return Err(LinalgError::NormTooLarge(top));
    }
    Ok(LinOp::Dense(&m * gram_function(&m, |v| 1.0 / (1.0 - v).sqrt())))
}

/// Where φ² is allowed to live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiSupport {
    Negative,
    Nonzero,
}

#[derive(Debug, Clone)]
pub struct JointEntry {
    pub r: f64,
    pub rho: i8,
    /// Orthonormal columns spanning the joint eigenspace.
    pub vectors: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub struct JointSpectrum {
    pub dim: usize,
    pub entries: Vec<JointEntry>,
    /// Largest distance of a φ eigenvalue from its label.
    pub max_rho_dev: f64,
}

impl JointSpectrum {
    pub fn assemble<E>(&self, mut f: impl FnMut(f64, i8) -> Result<C64, E>) -> Result<DMatrix<C64>, E> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            let v = f(e.r, e.rho)?;
            out += (&e.vectors * e.vectors.adjoint()) * v;
        }
        Ok(out)
    }
}

fn spectral_norm_bound(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Simultaneous spectral decomposition of a commuting pair (f, φ).
pub fn joint_decompose(f: &LinOp, phi: &LinOp, support: PhiSupport) -> Result<JointSpectrum, LinalgError> {
    let fm = dense_selfadjoint(f, PAIR_TOL)?;
    let pm = dense_selfadjoint(phi, PAIR_TOL)?;
    if fm.shape() != pm.shape() {
        return Err(LinalgError::Dimension { expected: fm.nrows(), got: pm.nrows() });
    }
    let n = fm.nrows();
    let (vals, vecs) = hermitian_eigen(&fm);
    let scale = spectral_norm_bound(&vals);
    let comm = (&fm * &pm - &pm * &fm).norm();
    if comm > PAIR_TOL * scale.max(1.0) {
        return Err(LinalgError::Commutation(comm));
    }
    let p2 = &pm * &pm;
    let idem = (&p2 * &p2 - &p2).norm();
    let kernel = 1e-8 * scale;
    let allowed = from_spectrum(&vals, &vecs, |v| {
        let inside = match support {
            PhiSupport::Negative => v < -kernel,
            PhiSupport::Nonzero => v.abs() > kernel,
        };
        C64::new(if inside { 1.0 } else { 0.0 }, 0.0)
    });
    let outside = (&p2 - &allowed * &p2).norm();
    if idem.max(outside) > PAIR_TOL {
        return Err(LinalgError::NotProjection(idem.max(outside)));
    }

    let mut entries = Vec::new();
    let mut max_dev = 0f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= 1e-6 * vals[end - 1].abs() + 1e-12 * scale {
            end += 1;
        }
        let e = vecs.columns(start, end - start).into_owned();
        let mean = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
        let r = if mean.abs() <= kernel { 0.0 } else { mean };
        let local = e.adjoint() * &pm * &e;
        let (pv, pw) = hermitian_eigen(&local);
        let mut groups: [Vec<usize>; 3] = [vec![], vec![], vec![]];
        for (i, &x) in pv.iter().enumerate() {
            let label = x.round().clamp(-1.0, 1.0);
            let dev = (x - label).abs();
            if dev > 1e-3 {
                return Err(LinalgError::RhoAmbiguous(x));
            }
            max_dev = max_dev.max(dev);
            groups[(label as i32 + 1) as usize].push(i);
        }
        let full = &e * pw;
        for (g, idx) in groups.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let cols: Vec<_> = idx.iter().map(|&i| full.column(i).into_owned()).collect();
            entries.push(JointEntry { r, rho: g as i8 - 1, vectors: DMatrix::from_columns(&cols) });
        }
        start = end;
    }
    Ok(JointSpectrum { dim: n, entries, max_rho_dev: max_dev })
}

/// F(f, φ) = Σ F(r,ρ) E(r,ρ).
pub fn joint_calc(
    f: &LinOp,
    phi: &LinOp,
    func: impl Fn(f64, i8) -> C64,
    support: PhiSupport,
) -> Result<(LinOp, JointSpectrum), LinalgError> {
    let js = joint_decompose(f, phi, support)?;
    let m = js.assemble::<LinalgError>(|r, rho| Ok(func(r, rho)))?;
    Ok((LinOp::Dense(m), js))
}
