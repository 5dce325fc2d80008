//! M-pairs, M²-quadruples and G-triples, the quantum exponential of an
//! operator pair, the selfadjoint extension [b+d]_φ and both ⊙ products.

pub mod lemma;
pub mod product;
pub mod standard;

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::deformation::{Deformation, Qexp, QexpError};
use crate::linalg::calc::{asymmetry, hermitian_eigen, joint_decompose, PhiSupport};
use crate::linalg::op::{kron, norm};
use crate::linalg::{DefectStats, LinOp, LinalgError};
use crate::C64;

pub use product::PairQexp;
pub use standard::{gtriple_standard, StandardModel, ZakrzewskiModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Qexp(#[from] QexpError),
    #[error("{what} violated (defect {value:e})")]
    Invariant { what: &'static str, value: f64 },
    #[error("tau must be nonnegative, got {0}")]
    NegativeTau(f64),
    #[error("lattice spacing {dq} is not hbar/m for an integer m (hbar = {hbar})")]
    Incommensurate { dq: f64, hbar: f64 },
    #[error("d has a kernel (smallest |eigenvalue| {0:e})")]
    SingularD(f64),
    #[error("f = e^(i hbar/2) d^-1 b is not selfadjoint (relative asymmetry {0:e})")]
    NonSelfadjointF(f64),
    #[error("result is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("operation needs the standard lattice model")]
    NotStandard,
}

const EXACT: f64 = 1e-10;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// χ(b ≠ 0) with the kernel cut at 10⁻⁸·‖b‖.
pub fn support_projection(b: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(b);
    let cut = 1e-8 * vals.iter().fold(0f64, |a, v| a.max(v.abs()));
    let mut p = DMatrix::zeros(b.nrows(), b.ncols());
    for (i, v) in vals.iter().enumerate() {
        if v.abs() > cut {
            let col = vecs.column(i);
            p += col * col.adjoint();
        }
    }
    p
}

/// χ(T < 0).
pub fn negative_projection(t: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(t);
    let cut = 1e-8 * vals.iter().fold(0f64, |a, v| a.max(v.abs()));
    let mut p = DMatrix::zeros(t.nrows(), t.ncols());
    for (i, v) in vals.iter().enumerate() {
        if *v < -cut {
            let col = vecs.column(i);
            p += col * col.adjoint();
        }
    }
    p
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MPairDefects {
    pub selfadjoint: f64,
    /// ‖bβ + βb‖ relative to ‖b‖.
    pub anticommutator: f64,
    /// ‖β² − χ(b≠0)‖.
    pub beta_square: f64,
}

impl MPairDefects {
    pub fn worst(&self) -> f64 {
        self.selfadjoint.max(self.anticommutator).max(self.beta_square)
    }

    pub fn measure(b: &DMatrix<C64>, beta: &DMatrix<C64>) -> Self {
        let anti = (b * beta + beta * b).norm();
        MPairDefects {
            selfadjoint: asymmetry(b).max(asymmetry(beta)),
            anticommutator: rel(anti, b.norm()),
            beta_square: (beta * beta - support_projection(b)).norm(),
        }
    }

    /// Probe-based measurement for matrix-free pairs whose b has no kernel.
    pub fn measure_on(b: &LinOp, beta: &LinOp, probes: &[Vec<C64>]) -> Self {
        let mut out = MPairDefects::default();
        for v in probes {
            let bv = b.apply(v);
            let anti: Vec<C64> =
                b.apply(&beta.apply(v)).iter().zip(beta.apply(&bv)).map(|(x, y)| x + y).collect();
            out.anticommutator = out.anticommutator.max(rel(norm(&anti), norm(&bv)));
            let bb = beta.apply(&beta.apply(v));
            let d: Vec<C64> = bb.iter().zip(v).map(|(x, y)| x - y).collect();
            out.beta_square = out.beta_square.max(rel(norm(&d), norm(v)));
        }
        out
    }
}

/// Selfadjoint (b, β) with bβ + βb = 0 and β² = χ(b≠0).
#[derive(Debug, Clone)]
pub struct MPair {
    pub b: LinOp,
    pub beta: LinOp,
    pub defects: MPairDefects,
}

impl MPair {
    pub fn new(b: LinOp, beta: LinOp) -> Result<Self, PairError> {
        if b.dim() != beta.dim() {
            return Err(LinalgError::Dimension { expected: b.dim(), got: beta.dim() }.into());
        }
        let defects = MPairDefects::measure(&b.to_dense()?, &beta.to_dense()?);
        for (what, v) in [
            ("selfadjointness", defects.selfadjoint),
            ("b beta + beta b = 0", defects.anticommutator),
            ("beta^2 = chi(b != 0)", defects.beta_square),
        ] {
            if v > EXACT {
                return Err(PairError::Invariant { what, value: v });
            }
        }
        Ok(MPair { b, beta, defects })
    }

    /// Wraps a pair whose invariants were measured elsewhere.
    pub fn measured(b: LinOp, beta: LinOp, defects: MPairDefects) -> Self {
        MPair { b, beta, defects }
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }
}

/// ⊕ of the blocks b(τ) = diag(τ, −τ), β(τ) = χ(τ≠0)·antidiag(1, 1).
pub fn mpair_from_taus(taus: &[f64]) -> Result<MPair, PairError> {
    if let Some(&t) = taus.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(PairError::NegativeTau(t));
    }
    let n = 2 * taus.len();
    let mut b = DMatrix::zeros(n, n);
    let mut beta = DMatrix::zeros(n, n);
    for (i, &t) in taus.iter().enumerate() {
        b[(2 * i, 2 * i)] = c(t);
        b[(2 * i + 1, 2 * i + 1)] = c(-t);
        let x = if t != 0.0 { 1.0 } else { 0.0 };
        beta[(2 * i, 2 * i + 1)] = c(x);
        beta[(2 * i + 1, 2 * i)] = c(x);
    }
    MPair::new(LinOp::Dense(b), LinOp::Dense(beta))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadReport {
    pub b_delta: f64,
    pub d_beta: f64,
    pub beta_delta: f64,
    /// ‖(|b|^{it} d |b|^{−it} − e^{ħt} d)v‖ on packets, when measured.
    pub zakrzewski: Option<DefectStats>,
}

#[derive(Clone)]
pub enum QuadStructure {
    Generic,
    /// (a⊗b, I⊗β, b⊗I, β⊗I) over the standard model, with its stable F(T).
    StandardProduct(Arc<PairQexp>),
}

impl std::fmt::Debug for QuadStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuadStructure::Generic => write!(f, "Generic"),
            QuadStructure::StandardProduct(_) => write!(f, "StandardProduct"),
        }
    }
}

/// (b, β, d, δ) ∈ M².
#[derive(Debug, Clone)]
pub struct MQuad {
    pub first: MPair,
    pub second: MPair,
    pub report: QuadReport,
    pub structure: QuadStructure,
}

fn comm(x: &DMatrix<C64>, y: &DMatrix<C64>) -> f64 {
    rel((x * y - y * x).norm(), x.norm() * y.norm())
}

impl MQuad {
    pub fn new(first: MPair, second: MPair) -> Result<Self, PairError> {
        let (b, beta) = (first.b.to_dense()?, first.beta.to_dense()?);
        let (d, delta) = (second.b.to_dense()?, second.beta.to_dense()?);
        let report = QuadReport {
            b_delta: comm(&b, &delta),
            d_beta: comm(&d, &beta),
            beta_delta: comm(&beta, &delta),
            zakrzewski: None,
        };
        for (what, v) in [("b delta = delta b", report.b_delta), ("d beta = beta d", report.d_beta), (
            "beta delta = delta beta",
            report.beta_delta,
        )] {
            if v > EXACT {
                return Err(PairError::Invariant { what, value: v });
            }
        }
        Ok(MQuad { first, second, report, structure: QuadStructure::Generic })
    }
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).norm()
}

/// F_ħ(T, τ·χ(T<0)) through the joint spectral calculus.
pub fn qexp_of_pair(q: &Qexp, t: &LinOp, tau: &LinOp) -> Result<LinOp, PairError> {
    let tm = t.to_dense()?;
    let taum = tau.to_dense()?;
    let chi = negative_projection(&tm);
    let phi = &taum * &chi;
    let sq = (&phi * &phi - &chi).norm();
    if sq > 1e-8 {
        return Err(LinalgError::NotProjection(sq).into());
    }
    let js = joint_decompose(&LinOp::Dense(tm), &LinOp::Dense(phi), PhiSupport::Negative)?;
    let u = js.assemble(|r, rho| q.f(r, rho))?;
    let du = unitarity_defect(&u);
    if du > 1e-8 {
        return Err(PairError::NotUnitary(du));
    }
    Ok(LinOp::Dense(u))
}

/// ([b+d]_φ, δ̃) together with the measured asymmetry of f = e^{iħ/2}d^{−1}b.
#[derive(Debug, Clone)]
pub struct Extension {
    pub d_ext: LinOp,
    pub delta_ext: LinOp,
    pub f_asymmetry: f64,
}

/// Largest raw asymmetry of f accepted by the generic construction.
pub const F_ASYMMETRY_LIMIT: f64 = 1e-6;

pub fn sa_extension(q: &Qexp, quad: &MQuad) -> Result<Extension, PairError> {
    if let QuadStructure::StandardProduct(px) = &quad.structure {
        return Ok(px.extension());
    }
    let b = quad.first.b.to_dense()?;
    let beta = quad.first.beta.to_dense()?;
    let d = quad.second.b.to_dense()?;
    let delta = quad.second.beta.to_dense()?;
    let (vals, _) = hermitian_eigen(&d);
    let smallest = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let largest = vals.iter().fold(0f64, |a, v| a.max(v.abs()));
    if !(smallest > 1e-8 * largest) {
        return Err(PairError::SingularD(smallest));
    }
    let dinv = d.clone().try_inverse().ok_or(PairError::SingularD(smallest))?;
    let f = (dinv * &b) * C64::from_polar(1.0, q.def.hbar / 2.0);
    let asym = asymmetry(&f);
    if asym > F_ASYMMETRY_LIMIT {
        return Err(PairError::NonSelfadjointF(asym));
    }
    let fs = (&f + f.adjoint()) * c(0.5);
    let tau = (&beta * &delta) * c(q.def.parity());
    let x = qexp_of_pair(q, &LinOp::Dense(fs), &LinOp::Dense(tau))?.to_dense()?;
    Ok(Extension {
        d_ext: LinOp::Dense(x.adjoint() * &d * &x),
        delta_ext: LinOp::Dense(x.adjoint() * &delta * &x),
        f_asymmetry: asym,
    })
}

/// (b,β)⊙(d,δ) = ([b+d]_φ, δ̃).
pub fn circle_m(q: &Qexp, quad: &MQuad, probes: &[Vec<C64>]) -> Result<MPair, PairError> {
    let ext = sa_extension(q, quad)?;
    let defects = match (&ext.d_ext, &ext.delta_ext) {
        (LinOp::Dense(b), LinOp::Dense(beta)) => MPairDefects::measure(b, beta),
        (b, beta) => MPairDefects::measure_on(b, beta, probes),
    };
    Ok(MPair::measured(ext.d_ext, ext.delta_ext, defects))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripleReport {
    pub a_min_eigenvalue: Option<f64>,
    pub a_beta: f64,
    pub pair: MPairDefects,
    pub zakrzewski: Option<DefectStats>,
}

/// (a, b, β): a positive invertible, aβ = βa, (b, β) an M-pair, a ⋈ b.
#[derive(Debug, Clone)]
pub struct GTriple {
    pub a: LinOp,
    pub b: LinOp,
    pub beta: LinOp,
    pub def: Deformation,
    pub report: TripleReport,
    pub model: Option<Arc<StandardModel>>,
}

impl GTriple {
    /// Dense construction; ⋈ cannot hold exactly in finite dimension and is not checked.
    pub fn new(a: LinOp, b: LinOp, beta: LinOp, def: Deformation) -> Result<Self, PairError> {
        let am = a.to_dense()?;
        if asymmetry(&am) > EXACT {
            return Err(PairError::Invariant { what: "a selfadjoint", value: asymmetry(&am) });
        }
        let (vals, _) = hermitian_eigen(&am);
        let min = vals.first().copied().unwrap_or(0.0);
        if !(min > 0.0) {
            return Err(PairError::Invariant { what: "a positive", value: min });
        }
        let pair = MPair::new(b.clone(), beta.clone())?;
        let betam = beta.to_dense()?;
        let ab = comm(&am, &betam);
        if ab > EXACT {
            return Err(PairError::Invariant { what: "a beta = beta a", value: ab });
        }
        let report = TripleReport { a_min_eigenvalue: Some(min), a_beta: ab, pair: pair.defects, zakrzewski: None };
        Ok(GTriple { a, b, beta, def, report, model: None })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// (a,b,β)⊙(c,d,δ) = (a⊗c, [a⊗d + b⊗I]_φ, F*(β⊗I)F).
pub fn circle_g(q: &Qexp, g1: &GTriple, g2: &GTriple, probes: &[Vec<C64>]) -> Result<GTriple, PairError> {
    if let (Some(m1), Some(m2)) = (&g1.model, &g2.model) {
        if m1.lat == m2.lat && m1.def == m2.def {
            let px = Arc::new(PairQexp::new(m1.clone(), q)?);
            return Ok(px.circle(probes));
        }
    }
    let (a, b, beta) = (g1.a.to_dense()?, g1.b.to_dense()?, g1.beta.to_dense()?);
    let (cc, d, delta) = (g2.a.to_dense()?, g2.b.to_dense()?, g2.beta.to_dense()?);
    let i1 = DMatrix::identity(a.nrows(), a.ncols());
    let i2 = DMatrix::identity(cc.nrows(), cc.ncols());
    let first = MPair::new(LinOp::Dense(kron(&a, &d)), LinOp::Dense(kron(&i1, &delta)))?;
    let second = MPair::new(LinOp::Dense(kron(&b, &i2)), LinOp::Dense(kron(&beta, &i2)))?;
    let quad = MQuad::new(first, second)?;
    let ext = sa_extension(q, &quad)?;
    let at = kron(&a, &cc);
    let (db, dbeta) = (ext.d_ext.to_dense()?, ext.delta_ext.to_dense()?);
    let (vals, _) = hermitian_eigen(&at);
    let report = TripleReport {
        a_min_eigenvalue: vals.first().copied(),
        a_beta: comm(&at, &dbeta),
        pair: MPairDefects::measure(&db, &dbeta),
        zakrzewski: None,
    };
    Ok(GTriple { a: LinOp::Dense(at), b: ext.d_ext, beta: ext.delta_ext, def: g1.def, report, model: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::op::{pauli_x, pauli_z};

    fn q0() -> Qexp {
        Qexp::new(Deformation::new(0).unwrap())
    }

    #[test]
    fn taus_examples() {
        let p = mpair_from_taus(&[1.0]).unwrap();
        assert_eq!(p.b.to_dense().unwrap(), pauli_z());
        assert_eq!(p.beta.to_dense().unwrap(), pauli_x());
        let z = mpair_from_taus(&[0.0]).unwrap();
        assert_eq!(z.b.to_dense().unwrap().norm(), 0.0);
        assert_eq!(z.beta.to_dense().unwrap().norm(), 0.0);
        let two = mpair_from_taus(&[1.0, 2.0]).unwrap();
        assert_eq!(two.dim(), 4);
        assert_eq!(two.defects.worst(), 0.0);
        assert_eq!(mpair_from_taus(&[-1.0]).unwrap_err(), PairError::NegativeTau(-1.0));
    }

    #[test]
    fn qexp_of_positive_pair_is_scalar_calculus() {
        let q = q0();
        let t = DMatrix::from_row_slice(2, 2, &[c(2.0), c(0.5), c(0.5), c(1.0)]);
        let u = qexp_of_pair(&q, &LinOp::Dense(t.clone()), &LinOp::Dense(pauli_x())).unwrap().to_dense().unwrap();
        let (vals, vecs) = hermitian_eigen(&t);
        let mut want = DMatrix::zeros(2, 2);
        for i in 0..2 {
            let col = vecs.column(i);
            want += (&col * col.adjoint()) * q.v(vals[i].ln()).unwrap();
        }
        assert!((u - want).norm() < 1e-12);
        let id = qexp_of_pair(&q, &LinOp::Dense(DMatrix::zeros(3, 3)), &LinOp::Dense(DMatrix::zeros(3, 3))).unwrap();
        assert!((id.to_dense().unwrap() - DMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn qexp_of_g_tensor_b() {
        let q = q0();
        let (s, t) = (0.7, 1.9);
        let g = pauli_z() * c(s);
        let p = mpair_from_taus(&[t]).unwrap();
        let tt = kron(&g, &p.b.to_dense().unwrap());
        let tau = kron(&pauli_x(), &p.beta.to_dense().unwrap());
        let u = qexp_of_pair(&q, &LinOp::Dense(tt.clone()), &LinOp::Dense(tau)).unwrap().to_dense().unwrap();
        assert!(unitarity_defect(&u) < 1e-10);
        assert!((&u * &tt - &tt * &u).norm() < 1e-10);
        // brute force: T = diag(st, −st, −st, st); φ swaps the two middle entries
        let r = s * t;
        let v = q.f(r, 0).unwrap();
        let bv = q.branches(r.ln()).unwrap();
        let mut want = DMatrix::zeros(4, 4);
        want[(0, 0)] = v;
        want[(3, 3)] = v;
        let (cpl, spl) = (bv.neg_phase * bv.chi.cos(), bv.neg_phase * C64::new(0.0, bv.chi.sin()));
        want[(1, 1)] = cpl;
        want[(2, 2)] = cpl;
        want[(1, 2)] = spl;
        want[(2, 1)] = spl;
        assert!((u - want).norm() < 1e-12);
    }

    #[test]
    fn extension_with_zero_b_is_trivial() {
        let q = q0();
        let z = MPair::new(LinOp::Dense(DMatrix::zeros(2, 2)), LinOp::Dense(DMatrix::zeros(2, 2))).unwrap();
        let d = mpair_from_taus(&[1.5]).unwrap();
        let quad = MQuad::new(z, d.clone()).unwrap();
        let e = sa_extension(&q, &quad).unwrap();
        assert!((e.d_ext.to_dense().unwrap() - d.b.to_dense().unwrap()).norm() < 1e-14);
        assert!((e.delta_ext.to_dense().unwrap() - d.beta.to_dense().unwrap()).norm() < 1e-14);
        let m = circle_m(&q, &quad, &[]).unwrap();
        assert!(m.defects.worst() < 1e-12);
    }

    #[test]
    fn singular_d_rejected() {
        let q = q0();
        let b = mpair_from_taus(&[1.0]).unwrap();
        let d = mpair_from_taus(&[0.0]).unwrap();
        let quad = MQuad::new(b, d).unwrap();
        assert!(matches!(sa_extension(&q, &quad), Err(PairError::SingularD(_))));
    }

    #[test]
    fn dense_triple_validation() {
        let def = Deformation::new(0).unwrap();
        let p = mpair_from_taus(&[1.0]).unwrap();
        let a = LinOp::Dense(DMatrix::identity(2, 2) * c(2.0));
        let g = GTriple::new(a, p.b.clone(), p.beta.clone(), def).unwrap();
        assert_eq!(g.report.a_min_eigenvalue, Some(2.0));
        let bad = LinOp::Dense(pauli_z());
        assert!(matches!(GTriple::new(bad, p.b, p.beta, def), Err(PairError::Invariant { what: "a positive", .. })));
    }
}
