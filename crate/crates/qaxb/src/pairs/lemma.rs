//! The exponential equation behind representations of M: with
//! U(b,β) = F_ħ(g⊗b, (γ⊗β)χ(g⊗b<0)) for g = diag(s,−s), γ = σ_x on 𝒦 = ℂ²,
//! and (R,ρ) = (a⊗b, I⊗β), (S,σ) = (b⊗I, β⊗I) from the standard model,
//! U((R,ρ)⊙(S,σ)) = F(T)* U(S,σ) F(T) should equal U(R,ρ)U(S,σ).
//!
//! Vectors on 𝒦⊗ℋ⊗ℋ are indexed κ·4N² + (two-leg index).

use std::sync::Arc;

use super::product::{negative_pair, positive, tensor, PairQexp};
use super::PairError;
use crate::deformation::BranchValues;
use crate::linalg::op::{diff_norm, norm};
use crate::linalg::DefectStats;
use crate::{par, C64};

pub struct LemmaCheck {
    pub px: Arc<PairQexp>,
    pub s: f64,
    tab_s: Vec<BranchValues>,
    tab_r: Vec<BranchValues>,
}

fn transpose(x: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for r in 0..rows {
        for c in 0..cols {
            y[c * rows + r] = x[r * cols + c];
        }
    }
    y
}

impl LemmaCheck {
    pub fn new(px: Arc<PairQexp>, s: f64) -> Result<Self, PairError> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(PairError::Invariant { what: "g scale", value: s });
        }
        let lat = &px.model.lat;
        let n = lat.n();
        let ls = s.ln();
        let xs: Vec<f64> = (0..n).map(|j| ls + lat.q(j)).collect();
        let tab_s = px.q.table_branches(&xs)?;
        let xr: Vec<f64> = (0..n * n).map(|k| ls + lat.p(k / n) + lat.q(k % n)).collect();
        let tab_r = px.q.table_branches(&xr)?;
        Ok(LemmaCheck { px, s, tab_s, tab_r })
    }

    pub fn dim(&self) -> usize {
        2 * self.px.dim()
    }

    fn n(&self) -> usize {
        self.px.n()
    }

    /// U(S,σ): diagonal in (κ, s1, j1), φ flips κ and s1.
    pub fn u_s(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        let n = self.n();
        let inner = 2 * n;
        let blk = 2 * n * inner;
        let mut y = x.to_vec();
        for j1 in 0..n {
            let bv = &self.tab_s[j1];
            for r in 0..inner {
                let at = |k: usize, s1: usize| k * blk + (s1 * n + j1) * inner + r;
                for c in 0..2 {
                    let i = at(c, c);
                    y[i] = positive(bv, y[i], adjoint);
                }
                let (i, j) = (at(0, 1), at(1, 0));
                let (u, v) = negative_pair(bv, y[i], y[j], 1.0, adjoint);
                y[i] = u;
                y[j] = v;
            }
        }
        y
    }

    /// U(R,ρ): diagonal in (κ, s1, momentum l1, s2, j2), φ flips κ and s2.
    pub fn u_r(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        let n = self.n();
        let lat = &self.px.model.lat;
        let cols = 2 * n;
        // (κ,s1) blocks of N×2N; move j1 to the fast axis for the transform
        let mut y: Vec<C64> = Vec::with_capacity(x.len());
        for b in x.chunks(n * cols) {
            let mut t = transpose(b, n, cols);
            lat.to_momentum(&mut t);
            y.extend(transpose(&t, cols, n));
        }
        let blk = 2 * n * cols;
        for l1 in 0..n {
            for j2 in 0..n {
                let bv = &self.tab_r[l1 * n + j2];
                for s1 in 0..2 {
                    let at = |k: usize, s2: usize| k * blk + (s1 * n + l1) * cols + s2 * n + j2;
                    for c in 0..2 {
                        let i = at(c, c);
                        y[i] = positive(bv, y[i], adjoint);
                    }
                    let (i, j) = (at(0, 1), at(1, 0));
                    let (u, v) = negative_pair(bv, y[i], y[j], 1.0, adjoint);
                    y[i] = u;
                    y[j] = v;
                }
            }
        }
        let mut out = Vec::with_capacity(x.len());
        for b in y.chunks(n * cols) {
            let mut t = transpose(b, n, cols);
            lat.to_position(&mut t);
            out.extend(transpose(&t, cols, n));
        }
        out
    }

    /// I⊗F(T) or its adjoint.
    pub fn x_leg(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        let d = self.px.dim();
        let mut out = Vec::with_capacity(x.len());
        for b in x.chunks(d) {
            out.extend(self.px.apply(b, adjoint));
        }
        out
    }

    /// Probe vectors κ ⊗ packet ⊗ packet with both packets positioned so that
    /// the relevant spectra stay well inside the lattice.
    pub fn probes(&self, count: usize) -> Vec<Vec<C64>> {
        let m = &self.px.model;
        let w = m.coherent_width();
        let quarter = m.lat.length() / 8.0;
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let kappas = [[o, z], [z, o], [o, o], [o, C64::new(0.0, 1.0)]];
        let spin = [[o, o], [o, z], [z, o], [o, C64::new(0.0, -1.0)]];
        (0..count)
            .map(|i| {
                let f = if count > 1 { i as f64 / (count - 1) as f64 - 0.5 } else { 0.0 };
                let v1 = m.packet(spin[i % 4], quarter * f, 0.3 * quarter * f, w).expect("interior");
                let v2 = m.packet(spin[(i + 1) % 4], -quarter * f, 0.2 * quarter, w).expect("interior");
                let k = kappas[i % 4];
                let kn = (k[0].norm_sqr() + k[1].norm_sqr()).sqrt();
                let k = [k[0] / kn, k[1] / kn];
                tensor(&k, &tensor(&v1, &v2))
            })
            .collect()
    }

    /// ‖(X*U(S)X − U(R)U(S))v‖ on the probes.
    pub fn residual(&self, probes: &[Vec<C64>]) -> DefectStats {
        let res = par::map(probes, |v| {
            let lhs = self.x_leg(&self.u_s(&self.x_leg(v, false), false), true);
            let rhs = self.u_r(&self.u_s(v, false), false);
            diff_norm(&lhs, &rhs) / norm(v)
        });
        DefectStats {
            max: res.iter().cloned().fold(0.0, f64::max),
            mean: res.iter().sum::<f64>() / res.len().max(1) as f64,
            op_norm: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{Deformation, Qexp};
    use crate::linalg::op::random_unit;
    use crate::pairs::StandardModel;
    use rand::SeedableRng;

    fn check(n: usize) -> LemmaCheck {
        let d = Deformation::new(0).unwrap();
        let model = Arc::new(StandardModel::balanced(n, d).unwrap());
        let px = Arc::new(PairQexp::new(model, &Qexp::new(d)).unwrap());
        LemmaCheck::new(px, 1.0).unwrap()
    }

    #[test]
    fn kernels_are_unitary() {
        let c = check(16);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = random_unit(c.dim(), &mut rng);
        for adj in [false, true] {
            assert!((norm(&c.u_s(&v, adj)) - 1.0).abs() < 1e-10);
            assert!((norm(&c.u_r(&v, adj)) - 1.0).abs() < 1e-10);
        }
        assert!(diff_norm(&c.u_r(&c.u_r(&v, false), true), &v) < 1e-10);
        assert!(diff_norm(&c.u_s(&c.u_s(&v, true), false), &v) < 1e-10);
    }

    #[test]
    fn residual_trend() {
        for n in [64, 128, 256] {
            let c = check(n);
            let pr = c.probes(4);
            let t = std::time::Instant::now();
            let r = c.residual(&pr);
            eprintln!("N={n} lemma {:.3e} mean {:.3e} {:?}", r.max, r.mean, t.elapsed());
        }
    }
}
