//! The quantum exponential F_ħ(T, τχ(T<0)) on ℋ⊗ℋ for T = e^{iħ/2}b^{−1}a⊗b of
//! the standard model, built in the eigenbasis of the stable form
//! T = (σ_z⊗e^{P−Q})⊗(σ_z⊗e^{Q}).
//!
//! Two-leg vectors are indexed ((s1·N + j1)·2 + s2)·N + j2.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::standard::{spin_sign, StandardModel};
use super::{Extension, GTriple, MPair, MPairDefects, MQuad, PairError, QuadReport, QuadStructure, TripleReport};
use crate::deformation::{BranchValues, Qexp};
use crate::linalg::calc::hermitian_eigen;
use crate::linalg::op::{diff_norm, gemm, norm};
use crate::linalg::defect::relative_defect;
use crate::linalg::{leg_embed, DefectStats, LinOp};
use crate::C64;

pub struct PairQexp {
    pub model: Arc<StandardModel>,
    pub q: Qexp,
    mu: Vec<f64>,
    u: Vec<C64>,
    uh: Vec<C64>,
    table: Vec<BranchValues>,
}

impl std::fmt::Debug for PairQexp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PairQexp(N = {})", self.model.n())
    }
}

#[inline]
pub(crate) fn positive(bv: &BranchValues, y: C64, adjoint: bool) -> C64 {
    if adjoint {
        bv.positive.conj() * y
    } else {
        bv.positive * y
    }
}

/// The 2×2 action of e^{iα}(cos χ + i sin χ φ) on a pair with φ e₀ = σ e₁, φ e₁ = σ e₀.
#[inline]
pub(crate) fn negative_pair(bv: &BranchValues, y0: C64, y1: C64, sigma: f64, adjoint: bool) -> (C64, C64) {
    let (c, s) = (bv.chi.cos(), sigma * bv.chi.sin());
    if adjoint {
        let ph = bv.neg_phase.conj();
        let is = C64::new(0.0, -s);
        (ph * (y0 * c + is * y1), ph * (y1 * c + is * y0))
    } else {
        let ph = bv.neg_phase;
        let is = C64::new(0.0, s);
        (ph * (y0 * c + is * y1), ph * (y1 * c + is * y0))
    }
}

impl PairQexp {
    pub fn new(model: Arc<StandardModel>, q: &Qexp) -> Result<Self, PairError> {
        let n = model.n();
        let lat = &model.lat;
        let p = crate::linalg::lattice::momentum_function(lat, |p| C64::new(p, 0.0)).to_dense()?;
        let h = DMatrix::from_fn(n, n, |i, j| if i == j { p[(i, j)] - lat.q(i) } else { p[(i, j)] });
        let (mu, vecs) = hermitian_eigen(&h);
        let u: Vec<C64> = (0..n * n).map(|k| vecs[(k / n, k % n)]).collect();
        let uh: Vec<C64> = (0..n * n).map(|k| vecs[(k % n, k / n)].conj()).collect();
        let xs: Vec<f64> = (0..n * n).map(|k| mu[k / n] + lat.q(k % n)).collect();
        let table = q.table_branches(&xs)?;
        Ok(PairQexp { model, q: *q, mu, u, uh, table })
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn dim(&self) -> usize {
        4 * self.n() * self.n()
    }

    /// Eigenvalues of the lattice P − Q.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    fn change_basis(&self, x: &[C64], m: &[C64]) -> Vec<C64> {
        let n = self.n();
        let blk = 2 * n * n;
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for s in 0..2 {
            gemm(n, n, 2 * n, m, &x[s * blk..(s + 1) * blk], &mut y[s * blk..(s + 1) * blk]);
        }
        y
    }

    fn kernel(&self, y: &mut [C64], adjoint: bool) {
        let n = self.n();
        let sigma = self.q.def.parity();
        let idx = |s1: usize, a: usize, s2: usize, l: usize| ((s1 * n + a) * 2 + s2) * n + l;
        for a in 0..n {
            for l in 0..n {
                let bv = &self.table[a * n + l];
                for s in 0..2 {
                    let i = idx(s, a, s, l);
                    y[i] = positive(bv, y[i], adjoint);
                }
                let (i, j) = (idx(0, a, 1, l), idx(1, a, 0, l));
                let (u, v) = negative_pair(bv, y[i], y[j], sigma, adjoint);
                y[i] = u;
                y[j] = v;
            }
        }
    }

    /// F(T)v, or F(T)*v.
    pub fn apply(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        assert_eq!(x.len(), self.dim(), "dimension mismatch");
        let mut y = self.change_basis(x, &self.uh);
        self.kernel(&mut y, adjoint);
        self.change_basis(&y, &self.u)
    }

    /// Projection onto T > 0 plus the ρ = −1 eigenspace of τ inside T < 0:
    /// the part of ℋ⊗ℋ where [R+S]_φ acts on packets as the literal sum.
    pub fn literal_sector(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n();
        let sigma = self.q.def.parity();
        let mut y = self.change_basis(x, &self.uh);
        let idx = |s1: usize, a: usize, s2: usize, l: usize| ((s1 * n + a) * 2 + s2) * n + l;
        for a in 0..n {
            for l in 0..n {
                let (i, j) = (idx(0, a, 1, l), idx(1, a, 0, l));
                // ρ = −1 eigenvector of e₀ ↦ σe₁ is (e₀ − σe₁)/√2
                let c = (y[i] - y[j] * sigma) * 0.5;
                y[i] = c;
                y[j] = -c * sigma;
            }
        }
        self.change_basis(&y, &self.u)
    }

    pub fn linop(self: &Arc<Self>) -> LinOp {
        let (a, b) = (self.clone(), self.clone());
        LinOp::from_fns(self.dim(), move |x| a.apply(x, false), move |x| b.apply(x, true))
    }

    /// T in its stable form, matrix-free.
    pub fn t_stable(self: &Arc<Self>) -> LinOp {
        let me = self.clone();
        let f = move |x: &[C64]| {
            let n = me.n();
            let mut y = me.change_basis(x, &me.uh);
            for (k, v) in y.iter_mut().enumerate() {
                let (l, s2, a, s1) = (k % n, (k / n) % 2, (k / (2 * n)) % n, k / (2 * n * n));
                *v *= spin_sign(s1) * spin_sign(s2) * (me.mu[a] + me.model.lat.q(l)).exp();
            }
            me.change_basis(&y, &me.u)
        };
        let g = f.clone();
        LinOp::from_fns(self.dim(), f, g)
    }

    fn two_leg(&self, op: &LinOp, leg: usize) -> LinOp {
        let d = self.model.dim();
        leg_embed(op, &[leg], &[d, d]).expect("leg dimensions").into_linop()
    }

    /// e^{iħ/2}(b^{−1}a)⊗b computed literally.
    pub fn t_raw(&self) -> LinOp {
        let m = &self.model;
        let binv = m.diag_fn(|s, q| C64::new(s * (-q).exp(), 0.0));
        let first = binv.compose(&m.a()).expect("dims");
        let t = LinOp::product(&[self.two_leg(&first, 1), self.two_leg(&m.b(), 2)]).expect("dims");
        let ph = C64::from_polar(1.0, m.def.hbar / 2.0);
        let (t1, t2) = (t.clone(), t);
        LinOp::from_fns(
            self.dim(),
            move |x| t1.apply(x).into_iter().map(|v| v * ph).collect(),
            move |x| t2.apply_adjoint(x).into_iter().map(|v| v * ph.conj()).collect(),
        )
    }

    /// ‖(T_stable − T_raw)v‖/‖T_raw v‖ on probes.
    pub fn t_defect(self: &Arc<Self>, probes: &[Vec<C64>]) -> DefectStats {
        let (a, b) = (self.t_stable(), self.t_raw());
        relative_defect(&a, &b, probes)
    }

    /// S = b⊗I, R = a⊗b and the spinor flips β⊗I, I⊗β.
    pub fn legs(&self) -> (LinOp, LinOp, LinOp, LinOp) {
        let m = &self.model;
        let s = self.two_leg(&m.b(), 1);
        let r = LinOp::product(&[self.two_leg(&m.a(), 1), self.two_leg(&m.b(), 2)]).expect("dims");
        (s, r, self.two_leg(&m.beta(), 1), self.two_leg(&m.beta(), 2))
    }

    pub fn extension(self: &Arc<Self>) -> Extension {
        let (s, _, beta1, _) = self.legs();
        Extension { d_ext: self.conjugate(&s), delta_ext: self.conjugate(&beta1), f_asymmetry: 0.0 }
    }

    /// F*·x·F.
    pub fn conjugate(self: &Arc<Self>, x: &LinOp) -> LinOp {
        let (a, b) = (self.clone(), self.clone());
        let (x1, x2) = (x.clone(), x.clone());
        LinOp::from_fns(
            self.dim(),
            move |v| a.apply(&x1.apply(&a.apply(v, false)), true),
            move |v| b.apply(&x2.apply_adjoint(&b.apply(v, false)), true),
        )
    }

    /// The quadruple (a⊗b, I⊗β, b⊗I, β⊗I) with defects measured on probes.
    pub fn quad(self: &Arc<Self>, probes: &[Vec<C64>]) -> MQuad {
        let (s, r, beta1, beta2) = self.legs();
        let first = MPair::measured(r.clone(), beta2.clone(), MPairDefects::measure_on(&r, &beta2, probes));
        let second = MPair::measured(s.clone(), beta1.clone(), MPairDefects::measure_on(&s, &beta1, probes));
        let report = QuadReport {
            b_delta: commutator_defect(&r, &beta1, probes),
            d_beta: commutator_defect(&s, &beta2, probes),
            beta_delta: commutator_defect(&beta2, &beta1, probes),
            zakrzewski: Some(self.r_s_zakrzewski(probes)),
        };
        MQuad { first, second, report, structure: QuadStructure::StandardProduct(self.clone()) }
    }

    /// ‖(|R|^{it} S |R|^{−it} − e^{ħt} S)v‖ for a few commensurate t.
    fn r_s_zakrzewski(&self, probes: &[Vec<C64>]) -> DefectStats {
        let m = &self.model;
        let (s, _, _, _) = self.legs();
        let mut stats = DefectStats { max: 0.0, mean: 0.0, op_norm: None };
        let mut count = 0;
        for n in [1i64, -2] {
            let t = m.shift_time(n);
            let u = LinOp::product(&[self.two_leg(&m.a_it(t), 1), self.two_leg(&m.abs_b_it(t), 2)]).expect("dims");
            let scale = (m.def.hbar * t).exp();
            for v in probes {
                let lhs = u.apply(&s.apply(&u.apply_adjoint(v)));
                let rhs: Vec<C64> = s.apply(v).into_iter().map(|x| x * scale).collect();
                let r = diff_norm(&lhs, &rhs) / norm(&rhs);
                stats.max = stats.max.max(r);
                stats.mean += r;
                count += 1;
            }
        }
        stats.mean /= count.max(1) as f64;
        stats
    }

    /// (a,b,β)⊙(a,b,β) for the standard triple.
    pub fn circle(self: &Arc<Self>, probes: &[Vec<C64>]) -> GTriple {
        let m = &self.model;
        let at = LinOp::product(&[self.two_leg(&m.a(), 1), self.two_leg(&m.a(), 2)]).expect("dims");
        let ext = self.extension();
        let report = TripleReport {
            a_min_eigenvalue: None,
            a_beta: commutator_defect(&at, &ext.delta_ext, probes),
            pair: MPairDefects::measure_on(&ext.d_ext, &ext.delta_ext, probes),
            zakrzewski: None,
        };
        GTriple { a: at, b: ext.d_ext, beta: ext.delta_ext, def: m.def, report, model: None }
    }
}

fn commutator_defect(x: &LinOp, y: &LinOp, probes: &[Vec<C64>]) -> f64 {
    probes
        .iter()
        .map(|v| {
            let a = x.apply(&y.apply(v));
            let b = y.apply(&x.apply(v));
            diff_norm(&a, &b) / norm(&a).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Product vector v₁⊗v₂.
pub fn tensor(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::Deformation;
    use crate::linalg::op::{kron, pauli_x};
    use crate::pairs::qexp_of_pair;

    #[test]
    fn matches_dense_joint_calculus() {
        for k in [0, 1] {
            let d = Deformation::new(k).unwrap();
            let q = Qexp::new(d);
            let model = Arc::new(StandardModel::balanced(8, d).unwrap());
            let px = Arc::new(PairQexp::new(model.clone(), &q).unwrap());
            let t = px.t_stable().to_dense().unwrap();
            let i = DMatrix::identity(model.n(), model.n());
            let bb = kron(&kron(&pauli_x(), &i), &kron(&pauli_x(), &i)) * C64::new(d.parity(), 0.0);
            let dense = qexp_of_pair(&q, &LinOp::Dense(t), &LinOp::Dense(bb)).unwrap().to_dense().unwrap();
            let mine = px.linop().to_dense().unwrap();
            assert!((&dense - &mine).norm() < 1e-9, "k={k} {}", (&dense - &mine).norm());
            let adj = px.linop().adjoint().to_dense().unwrap();
            assert!((adj - mine.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn stable_t_matches_raw_on_packets() {
        let d = Deformation::new(0).unwrap();
        let q = Qexp::new(d);
        for n in [64, 128] {
            let model = Arc::new(StandardModel::balanced(n, d).unwrap());
            let px = Arc::new(PairQexp::new(model.clone(), &q).unwrap());
            let w = model.coherent_width();
            let o = C64::new(1.0, 0.0);
            let v1 = model.packet([o, o], 0.5, 0.3, w).unwrap();
            let v2 = model.packet([o, C64::new(0.0, 1.0)], -1.0, 0.0, w).unwrap();
            let r = px.t_defect(&[tensor(&v1, &v2)]).max;
            assert!(r < 1e-4, "N={n} {r}");
        }
    }
}
