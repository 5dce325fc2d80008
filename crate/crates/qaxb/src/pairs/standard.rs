//! The standard lattice model ℋ = ℂ²⊗ℂ^N with a = I⊗e^P, b = σ_z⊗e^Q, β = σ_x⊗I.
//! Vectors are indexed by s·N + j (spinor s, lattice site j).

use std::sync::Arc;

use super::{GTriple, MPairDefects, PairError, TripleReport};
use crate::deformation::Deformation;
use crate::linalg::op::{diff_norm, norm};
use crate::linalg::{gaussian_packet, DefectStats, LatticeLine, LinOp, LinalgError};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardModel {
    pub lat: LatticeLine,
    pub def: Deformation,
    /// Overrides the default width of `interior_probes`.
    pub probe_width: Option<f64>,
}

pub(crate) fn spin_sign(s: usize) -> f64 {
    if s == 0 {
        1.0
    } else {
        -1.0
    }
}

impl StandardModel {
    pub fn new(lat: LatticeLine, def: Deformation) -> Result<Self, PairError> {
        if (lat.hbar() - def.hbar).abs() > 1e-14 || lat.commensurate_m().is_none() {
            return Err(PairError::Incommensurate { dq: lat.dq(), hbar: def.hbar });
        }
        Ok(StandardModel { lat, def, probe_width: None })
    }

    pub fn balanced(n: usize, def: Deformation) -> Result<Self, PairError> {
        Self::new(LatticeLine::balanced(n, def.hbar)?, def)
    }

    pub fn with_probe_width(mut self, w: f64) -> Result<Self, PairError> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(LinalgError::PacketWidth(w).into());
        }
        self.probe_width = Some(w);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.lat.n()
    }

    pub fn dim(&self) -> usize {
        2 * self.lat.n()
    }

    /// g(P) on both spinor components.
    pub fn momentum_fn(&self, g: impl Fn(f64) -> C64) -> LinOp {
        let lat = self.lat.clone();
        let gv: Vec<C64> = lat.ps().into_iter().map(g).collect();
        let gc: Vec<C64> = gv.iter().map(|v| v.conj()).collect();
        let (l2, g2) = (lat.clone(), gv);
        LinOp::from_fns(
            self.dim(),
            move |x| {
                let mut y = x.to_vec();
                l2.momentum_multiply(&mut y, &g2);
                y
            },
            move |x| {
                let mut y = x.to_vec();
                lat.momentum_multiply(&mut y, &gc);
                y
            },
        )
    }

    pub fn a(&self) -> LinOp {
        self.momentum_fn(|p| C64::new(p.exp(), 0.0))
    }

    /// a^{is} = e^{isP}.
    pub fn a_it(&self, s: f64) -> LinOp {
        self.momentum_fn(move |p| C64::from_polar(1.0, s * p))
    }

    /// Diagonal operator with entry f(sign, q) at (s, j).
    pub fn diag_fn(&self, f: impl Fn(f64, f64) -> C64) -> LinOp {
        let n = self.n();
        LinOp::diagonal((0..2 * n).map(|i| f(spin_sign(i / n), self.lat.q(i % n))).collect())
    }

    pub fn b(&self) -> LinOp {
        self.diag_fn(|s, q| C64::new(s * q.exp(), 0.0))
    }

    /// |b|^{it} = e^{itQ}.
    pub fn abs_b_it(&self, t: f64) -> LinOp {
        self.diag_fn(move |_, q| C64::from_polar(1.0, t * q))
    }

    pub fn beta(&self) -> LinOp {
        let n = self.n();
        let swap = move |x: &[C64]| {
            let mut y = Vec::with_capacity(2 * n);
            y.extend_from_slice(&x[n..]);
            y.extend_from_slice(&x[..n]);
            y
        };
        LinOp::from_fns(2 * n, swap, swap)
    }

    /// spinor ⊗ Gaussian packet.
    pub fn packet(&self, spinor: [C64; 2], q_c: f64, p_c: f64, width: f64) -> Result<Vec<C64>, LinalgError> {
        let p = gaussian_packet(&self.lat, q_c, p_c, width)?;
        let s = (spinor[0].norm_sqr() + spinor[1].norm_sqr()).sqrt();
        let mut v = Vec::with_capacity(self.dim());
        for sp in spinor {
            v.extend(p.vector.iter().map(|x| x * sp / s));
        }
        Ok(v)
    }

    /// Coherent width √(ħ/2).
    pub fn coherent_width(&self) -> f64 {
        (self.def.hbar / 2.0).sqrt()
    }

    /// Probe packets centred in the middle quarter of the lattice.
    pub fn interior_probes(&self, count: usize) -> Vec<Vec<C64>> {
        // narrower than coherent on small lattices so the boundary-mass bound holds
        let w = self.probe_width.unwrap_or(self.coherent_width().min(self.lat.length() / 24.0));
        // Middle quarter: e^{±Q} weights amplify whatever tail wraps around the
        // torus, so the middle half is not safe once a packet is also shifted.
        let half = self.lat.length() / 8.0;
        let o = C64::new(1.0, 0.0);
        let spinors = [[o, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), o], [o, o], [o, C64::new(0.0, -1.0)]];
        (0..count)
            .map(|i| {
                let f = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
                let q_c = -half + 2.0 * half * f;
                let p_c = 0.5 * half * (2.0 * ((i * 7 + 3) % count.max(1)) as f64 / count.max(1) as f64 - 1.0);
                self.packet(spinors[i % 4], q_c, p_c, w).expect("interior packet")
            })
            .collect()
    }

    /// Shift counts n with ħt = n·dq and |n| ≤ N/8.
    pub fn commensurate_shifts(&self) -> Vec<i64> {
        let lim = (self.n() / 8) as i64;
        (-lim..=lim).filter(|&n| n != 0).collect()
    }

    pub fn shift_time(&self, n: i64) -> f64 {
        n as f64 * self.lat.dq() / self.def.hbar
    }
}

/// Realized pair (a, b) of the standard model with its commensurate shift set.
#[derive(Debug, Clone)]
pub struct ZakrzewskiModel {
    pub model: Arc<StandardModel>,
    pub shifts: Vec<i64>,
}

impl ZakrzewskiModel {
    pub fn new(model: Arc<StandardModel>) -> Self {
        let shifts = model.commensurate_shifts();
        ZakrzewskiModel { model, shifts }
    }

    /// max/mean over probes and the given shifts of
    /// ‖(|a|^{it} b |a|^{−it} − e^{ħt} b)ψ‖ / ‖e^{ħt} bψ‖.
    pub fn defect(&self, probes: &[Vec<C64>], shifts: &[i64]) -> DefectStats {
        let m = &self.model;
        let b = m.b();
        let (mut max, mut sum, mut count) = (0f64, 0f64, 0usize);
        for &n in shifts {
            let t = m.shift_time(n);
            let u = m.a_it(t);
            let scale = (m.def.hbar * t).exp();
            for v in probes {
                let lhs = u.apply(&b.apply(&u.apply_adjoint(v)));
                let rhs: Vec<C64> = b.apply(v).into_iter().map(|x| x * scale).collect();
                let r = diff_norm(&lhs, &rhs) / norm(&rhs);
                max = max.max(r);
                sum += r;
                count += 1;
            }
        }
        DefectStats { max, mean: sum / count.max(1) as f64, op_norm: None }
    }
}

/// The standard G-triple on ℂ²⊗ℂ^N, validated on interior packets.
pub fn gtriple_standard(l: &LatticeLine, d: Deformation) -> Result<GTriple, PairError> {
    let model = Arc::new(StandardModel::new(l.clone(), d)?);
    let (a, b, beta) = (model.a(), model.b(), model.beta());
    let probes = model.interior_probes(4);
    let zm = ZakrzewskiModel::new(model.clone());
    let few: Vec<i64> = [1, -1, 2].into_iter().filter(|n| zm.shifts.contains(n)).collect();
    let zak = zm.defect(&probes, &few);
    let mut a_beta = 0f64;
    for v in &probes {
        let x = a.apply(&beta.apply(v));
        let y = beta.apply(&a.apply(v));
        a_beta = a_beta.max(diff_norm(&x, &y) / norm(&x));
    }
    let pair = MPairDefects::measure_on(&b, &beta, &probes);
    let report = TripleReport {
        a_min_eigenvalue: Some(l.ps().iter().fold(f64::INFINITY, |m, p| m.min(p.exp()))),
        a_beta,
        pair,
        zakrzewski: Some(zak),
    };
    Ok(GTriple { a, b, beta, def: d, report, model: Some(model) })
}
