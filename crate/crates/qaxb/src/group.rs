//! The multiplicative unitary W of the standard model, the comultiplication
//! Δ(x) = W(x⊗I)W*, the evaluation morphisms φ_t, the dual action θ_t and
//! the B₀ function model with its scaling action σ_t.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::deformation::Qexp;
use crate::linalg::calc::func_calc;
use crate::linalg::op::{diff_norm, inner, norm};
use crate::linalg::{gaussian_packet, leg_embed, DefectStats, LinOp, LinalgError};
use crate::pairs::product::tensor;
use crate::pairs::{GTriple, MPair, PairError, PairQexp, StandardModel};
use crate::{par, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("operator of dimension {got} does not act on K (x) H with dim H = {h}")]
    Dimension { got: usize, h: usize },
    #[error("momentum hbar*t = {p} is outside the representable window |p| <= {limit}")]
    Window { p: f64, limit: f64 },
    #[error("g2(0) must vanish, got {0}")]
    G2AtZero(f64),
}

fn stats(res: &[f64]) -> DefectStats {
    DefectStats {
        max: res.iter().cloned().fold(0.0, f64::max),
        mean: res.iter().sum::<f64>() / res.len().max(1) as f64,
        op_norm: None,
    }
}

/// W = F_ħ(T, (−1)^k(β⊗β)χ(b⊗b<0))* e^{(i/ħ) log|b|^{−1}⊗log a}, matrix-free on ℋ⊗ℋ.
#[derive(Clone)]
pub struct MultUnitary {
    pub px: Arc<PairQexp>,
}

impl fmt::Debug for MultUnitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultUnitary(N = {})", self.px.n())
    }
}

impl MultUnitary {
    pub fn new(model: Arc<StandardModel>, q: &Qexp) -> Result<Self, PairError> {
        Ok(MultUnitary { px: Arc::new(PairQexp::new(model, q)?) })
    }

    /// Requires the standard triple; ker b = {0} holds there by construction.
    pub fn from_triple(g: &GTriple, q: &Qexp) -> Result<Self, PairError> {
        let model = g.model.clone().ok_or(PairError::NotStandard)?;
        Self::new(model, q)
    }

    pub fn model(&self) -> &Arc<StandardModel> {
        &self.px.model
    }

    pub fn dim(&self) -> usize {
        self.px.dim()
    }

    /// e^{∓(i/ħ) Q₁⊗P₂}; diagonal in (position₁, momentum₂).
    pub fn phase(&self, x: &[C64], inverse: bool) -> Vec<C64> {
        let lat = &self.model().lat;
        let n = lat.n();
        let h = lat.hbar();
        let sign = if inverse { 1.0 } else { -1.0 };
        let mut y = x.to_vec();
        lat.to_momentum(&mut y);
        for (b, blk) in y.chunks_mut(n).enumerate() {
            let q1 = lat.q((b / 2) % n);
            for (l, v) in blk.iter_mut().enumerate() {
                *v *= C64::from_polar(1.0, sign * q1 * lat.p(l) / h);
            }
        }
        lat.to_position(&mut y);
        y
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.px.apply(&self.phase(x, false), true)
    }

    pub fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.phase(&self.px.apply(x, false), true)
    }

    pub fn linop(&self) -> LinOp {
        let (a, b) = (self.clone(), self.clone());
        LinOp::from_fns(self.dim(), move |x| a.apply(x), move |x| b.apply_adjoint(x))
    }

    /// ‖(W*W − I)ψ‖ and ‖(WW* − I)ψ‖ over probes.
    pub fn unitarity(&self, probes: &[Vec<C64>]) -> DefectStats {
        let res = par::map(probes, |v| {
            let a = diff_norm(&self.apply_adjoint(&self.apply(v)), v);
            let b = diff_norm(&self.apply(&self.apply_adjoint(v)), v);
            a.max(b) / norm(v)
        });
        stats(&res)
    }

    /// Product packets on ℋ⊗ℋ from the model's interior probes.
    pub fn probes(&self, count: usize) -> Vec<Vec<C64>> {
        let p = self.model().interior_probes(count + 1);
        (0..count).map(|i| tensor(&p[i], &p[count - i])).collect()
    }
}

/// Δ(x) = W(x⊗I)W*.
pub fn comultiply(x: &LinOp, w: &MultUnitary) -> Result<LinOp, GroupError> {
    let d = w.model().dim();
    if x.dim() != d {
        return Err(GroupError::Dimension { got: x.dim(), h: d });
    }
    let leg = leg_embed(x, &[1], &[d, d])?.into_linop();
    let (w1, w2) = (w.clone(), w.clone());
    let l2 = leg.clone();
    Ok(LinOp::from_fns(
        w.dim(),
        move |v| w1.apply(&leg.apply(&w1.apply_adjoint(v))),
        move |v| w2.apply(&l2.apply_adjoint(&w2.apply_adjoint(v))),
    ))
}

/// ‖(W₁₂W₁₃W₂₃ − W₂₃W₁₂)ψ‖ on ℋ⊗ℋ⊗ℋ.
pub fn pentagon_residual(w: &MultUnitary, probes: &[Vec<C64>]) -> Result<DefectStats, GroupError> {
    let d = w.model().dim();
    let dims = [d, d, d];
    let wl = w.linop();
    let w12 = leg_embed(&wl, &[1, 2], &dims)?;
    let w13 = leg_embed(&wl, &[1, 3], &dims)?;
    let w23 = leg_embed(&wl, &[2, 3], &dims)?;
    use crate::linalg::Operator;
    let res = par::map(probes, |v| {
        let lhs = w12.apply(&w13.apply(&w23.apply(v)));
        let rhs = w23.apply(&w12.apply(v));
        diff_norm(&lhs, &rhs) / norm(v)
    });
    Ok(stats(&res))
}

/// Triple product packets for the pentagon check.
pub fn pentagon_probes(model: &StandardModel, count: usize) -> Vec<Vec<C64>> {
    let p = model.interior_probes(count + 2);
    (0..count).map(|i| tensor(&p[i], &tensor(&p[(i + 3) % (count + 2)], &p[count + 1 - i]))).collect()
}

/// The packet realizing φ_t on the standard ℋ: |+⟩ ⊗ Gaussian at
/// q_c = q0 + L/8 (so b ≈ 0) and p_c = ħt (so a ≈ e^{ħt}).
#[derive(Debug, Clone)]
pub struct PhiPacket {
    pub t: f64,
    pub q_c: f64,
    pub p_c: f64,
    pub width: f64,
    pub vector: Vec<C64>,
    /// e^{q_c + 4w}: the size of b on the packet.
    pub b_scale: f64,
    /// ħ/(2w): momentum spread, so log a is ħt up to this.
    pub p_spread: f64,
}

pub fn phi_packet(model: &StandardModel, t: f64) -> Result<PhiPacket, GroupError> {
    let lat = &model.lat;
    let h = model.def.hbar;
    let q_c = lat.q0() + lat.length() / 8.0;
    // boundary-mass bound needs the centre ~9 widths from the end
    let width = model.coherent_width().min(lat.length() / 8.0 / 9.5);
    let p_spread = h / (2.0 * width);
    let p_c = h * t;
    let limit = lat.p(lat.n() - 1).min(-lat.p(0)) - 6.0 * p_spread;
    if !(p_c.abs() <= limit) {
        return Err(GroupError::Window { p: p_c, limit });
    }
    let g = gaussian_packet(lat, q_c, p_c, width)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut vector = Vec::with_capacity(model.dim());
    for _ in 0..2 {
        vector.extend(g.vector.iter().map(|x| x * s));
    }
    Ok(PhiPacket { t, q_c, p_c, width, vector, b_scale: (q_c + 4.0 * width).exp(), p_spread })
}

/// Largest |t| accepted by `phi_packet`.
pub fn phi_window(model: &StandardModel) -> f64 {
    let lat = &model.lat;
    let width = model.coherent_width().min(lat.length() / 8.0 / 9.5);
    (lat.p(lat.n() - 1).min(-lat.p(0)) - 6.0 * model.def.hbar / (2.0 * width)) / model.def.hbar
}

/// ⟨ψ_t| x |ψ_t⟩ over the ℋ leg of 𝒦⊗ℋ.
pub fn phi_eval_with(x: &LinOp, p: &PhiPacket) -> Result<DMatrix<C64>, GroupError> {
    let h = p.vector.len();
    if x.dim() % h != 0 {
        return Err(GroupError::Dimension { got: x.dim(), h });
    }
    let k = x.dim() / h;
    let cols = par::map_range(k, |i| {
        let mut v = vec![C64::new(0.0, 0.0); x.dim()];
        v[i * h..(i + 1) * h].copy_from_slice(&p.vector);
        let y = x.apply(&v);
        (0..k).map(|j| inner(&p.vector, &y[j * h..(j + 1) * h])).collect::<Vec<_>>()
    });
    Ok(DMatrix::from_fn(k, k, |j, i| cols[i][j]))
}

pub fn phi_eval(x: &LinOp, model: &StandardModel, t: f64) -> Result<DMatrix<C64>, GroupError> {
    phi_eval_with(x, &phi_packet(model, t)?)
}

/// θ_t(x) = (id⊗φ_t)Δ(x), matrix-free: v ↦ (I⊗⟨ψ_t|)Δ(x)(v⊗ψ_t).
pub fn theta_dual(x: &LinOp, t: f64, w: &MultUnitary) -> Result<LinOp, GroupError> {
    let p = Arc::new(phi_packet(w.model(), t)?);
    let delta = comultiply(x, w)?;
    let h = w.model().dim();
    let contract = move |y: Vec<C64>, p: &PhiPacket| -> Vec<C64> {
        y.chunks(h).map(|blk| inner(&p.vector, blk)).collect()
    };
    let (d1, d2, p1, p2) = (delta.clone(), delta, p.clone(), p);
    let (c1, c2) = (contract, contract);
    Ok(LinOp::from_fns(
        h,
        move |v| c1(d1.apply(&tensor(v, &p1.vector)), &p1),
        move |v| c2(d2.apply_adjoint(&tensor(v, &p2.vector)), &p2),
    ))
}

pub type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// f(τ) = g₁(τ) + g₂(τ)·iβ on the M-pair spectrum, with g₂(0) = 0.
#[derive(Clone)]
pub struct B0Function {
    pub g1: ScalarFn,
    pub g2: ScalarFn,
}

impl fmt::Debug for B0Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B0Function(g1(0) = {}, g2(0) = {})", (self.g1)(0.0), (self.g2)(0.0))
    }
}

impl B0Function {
    pub fn new(g1: ScalarFn, g2: ScalarFn) -> Result<Self, GroupError> {
        let z = g2(0.0).norm();
        if z > 1e-14 {
            return Err(GroupError::G2AtZero(z));
        }
        Ok(B0Function { g1, g2 })
    }

    /// sup of |g₁| + |g₂| over the given points.
    pub fn bound_on(&self, pts: &[f64]) -> f64 {
        pts.iter().map(|&t| (self.g1)(t).norm() + (self.g2)(t).norm()).fold(0.0, f64::max)
    }
}

/// g₁(b) + g₂(b)·iβ.
pub fn b0_apply(g: &B0Function, m: &MPair) -> Result<LinOp, GroupError> {
    let g1 = func_calc(&m.b, |x| (g.g1)(x))?.to_dense()?;
    let g2 = func_calc(&m.b, |x| (g.g2)(x))?.to_dense()?;
    let beta = m.beta.to_dense()?;
    Ok(LinOp::Dense(g1 + g2 * beta * C64::new(0.0, 1.0)))
}

/// (σ_t f)(τ) = f(e^{ħt}τ).
pub fn sigma_action(g: &B0Function, t: f64, hbar: f64) -> B0Function {
    let s = (hbar * t).exp();
    let (g1, g2) = (g.g1.clone(), g.g2.clone());
    B0Function { g1: Arc::new(move |x| g1(s * x)), g2: Arc::new(move |x| g2(s * x)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::Deformation;
    use crate::pairs::mpair_from_taus;

    fn w(n: usize, k: i64) -> MultUnitary {
        let d = Deformation::new(k).unwrap();
        MultUnitary::new(Arc::new(StandardModel::balanced(n, d).unwrap()), &Qexp::new(d)).unwrap()
    }

    fn bump() -> B0Function {
        B0Function::new(Arc::new(|x| C64::new((-x * x).exp(), 0.0)), Arc::new(|x| C64::new(x * (-x * x).exp(), 0.0)))
            .unwrap()
    }

    #[test]
    fn unitary_on_packets() {
        let w = w(64, 0);
        assert!(w.unitarity(&w.probes(3)).max < 1e-10);
        assert!(w.linop().adjoint_consistency(2, 5) < 1e-10);
    }

    #[test]
    fn comultiply_identity() {
        let w = w(32, 1);
        let id = comultiply(&LinOp::identity(w.model().dim()), &w).unwrap();
        for v in w.probes(2) {
            assert!(diff_norm(&id.apply(&v), &v) < 1e-10);
        }
        assert!(matches!(comultiply(&LinOp::identity(3), &w), Err(GroupError::Dimension { .. })));
    }

    #[test]
    fn delta_of_a_it_is_tensor_square() {
        let mut last = f64::INFINITY;
        for n in [64, 128] {
            let w = w(n, 0);
            let m = w.model();
            let s = m.shift_time(2);
            let ai = m.a_it(s);
            let da = comultiply(&ai, &w).unwrap();
            let aa = LinOp::product(&[
                leg_embed(&ai, &[1], &[m.dim(), m.dim()]).unwrap().into_linop(),
                leg_embed(&ai, &[2], &[m.dim(), m.dim()]).unwrap().into_linop(),
            ])
            .unwrap();
            let r = crate::linalg::defect::relative_defect(&da, &aa, &w.probes(3)).max;
            assert!(r < last, "N={n} {r}");
            last = r;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn b0_two_by_two_block() {
        let m = mpair_from_taus(&[1.0]).unwrap();
        let g = B0Function::new(Arc::new(|x| C64::new(1.0 / (1.0 + x * x), 0.0)), Arc::new(|_| C64::new(0.0, 0.0))).unwrap();
        let v = b0_apply(&g, &m).unwrap().to_dense().unwrap();
        assert!((v[(0, 0)].re - 0.5).abs() < 1e-15 && (v[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(v[(0, 1)].norm() < 1e-15);
        assert!(matches!(
            B0Function::new(Arc::new(|_| C64::new(0.0, 0.0)), Arc::new(|_| C64::new(1.0, 0.0))),
            Err(GroupError::G2AtZero(_))
        ));
    }

    #[test]
    fn sigma_zero_is_identity_and_matches_conjugation() {
        let d = Deformation::new(0).unwrap();
        let g = bump();
        let s0 = sigma_action(&g, 0.0, d.hbar);
        for x in [-2.0, 0.3, 1.7] {
            assert_eq!((s0.g1)(x), (g.g1)(x));
            assert_eq!((s0.g2)(x), (g.g2)(x));
        }
        let model = StandardModel::balanced(128, d).unwrap();
        let mp = MPair::measured(model.b(), model.beta(), Default::default());
        let t = model.shift_time(3);
        let lhs = LinOp::product(&[model.a_it(t), b0_apply(&g, &mp).unwrap(), model.a_it(-t)]).unwrap();
        let rhs = b0_apply(&sigma_action(&g, t, d.hbar), &mp).unwrap();
        for v in model.interior_probes(4) {
            assert!(diff_norm(&lhs.apply(&v), &rhs.apply(&v)) < 1e-8);
        }
    }

    #[test]
    fn phi_of_canonical_family() {
        let d = Deformation::new(0).unwrap();
        let model = StandardModel::balanced(256, d).unwrap();
        let t = 2.0 * model.lat.dp() / d.hbar;
        let s = 0.7;
        let u = phi_eval(&model.a_it(s), &model, t).unwrap()[(0, 0)];
        assert!((u.arg() - d.hbar * t * s).abs() < 1e-10, "{u}");
        let mp = MPair::measured(model.b(), model.beta(), Default::default());
        let g = bump();
        let gb = phi_eval(&b0_apply(&g, &mp).unwrap(), &model, t).unwrap()[(0, 0)];
        assert!((gb - (g.g1)(0.0)).norm() < 1e-5, "{gb}");
        assert!(matches!(phi_eval(&model.a_it(s), &model, 1e3), Err(GroupError::Window { .. })));
    }
}
