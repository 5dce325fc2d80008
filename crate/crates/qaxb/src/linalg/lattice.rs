use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::op::{DiagOp, LinOp, Operator};
use super::LinalgError;
use crate::C64;

/// Uniform position grid q_j = q0 + j·dq with the matching momentum grid
/// p_j = ħ·(2π/(N·dq))·(j − N/2).
#[derive(Clone)]
pub struct LatticeLine {
    n: usize,
    q0: f64,
    dq: f64,
    hbar: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for LatticeLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeLine")
            .field("n", &self.n)
            .field("q0", &self.q0)
            .field("dq", &self.dq)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl PartialEq for LatticeLine {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.q0 == o.q0 && self.dq == o.dq && self.hbar == o.hbar
    }
}

impl LatticeLine {
    pub fn new(n: usize, q0: f64, dq: f64, hbar: f64) -> Result<Self, LinalgError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(LinalgError::LatticeSize(n));
        }
        if !(dq > 0.0 && dq.is_finite()) {
            return Err(LinalgError::LatticeSpacing(dq));
        }
        let mut planner = FftPlanner::new();
        Ok(LatticeLine { n, q0, dq, hbar, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
    }

    /// Centred lattice with dq = ħ/m, m = round(sqrt(Nħ/2π)), so that
    /// position and momentum ranges are comparable.
    pub fn balanced(n: usize, hbar: f64) -> Result<Self, LinalgError> {
        let m = ((n as f64 * hbar / (2.0 * PI)).sqrt().round() as usize).max(1);
        let dq = hbar / m as f64;
        Self::new(n, -(n as f64 / 2.0) * dq, dq, hbar)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn q0(&self) -> f64 {
        self.q0
    }
    pub fn dq(&self) -> f64 {
        self.dq
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn length(&self) -> f64 {
        self.n as f64 * self.dq
    }
    pub fn q(&self, j: usize) -> f64 {
        self.q0 + j as f64 * self.dq
    }
    pub fn dp(&self) -> f64 {
        self.hbar * 2.0 * PI / (self.n as f64 * self.dq)
    }
    pub fn p(&self, j: usize) -> f64 {
        self.dp() * (j as f64 - (self.n / 2) as f64)
    }
    pub fn qs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.q(j)).collect()
    }
    pub fn ps(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.p(j)).collect()
    }

    /// Integer m with ħ = m·dq, if the spacing is commensurate.
    pub fn commensurate_m(&self) -> Option<usize> {
        let m = self.hbar / self.dq;
        let r = m.round();
        ((m - r).abs() < 1e-9 * m.max(1.0) && r >= 1.0).then_some(r as usize)
    }

    /// Centred unitary DFT applied in place to every contiguous block of length N.
    pub fn to_momentum(&self, data: &mut [C64]) {
        self.transform(data, &self.fwd);
    }

    pub fn to_position(&self, data: &mut [C64]) {
        self.transform(data, &self.inv);
    }

    // With N divisible by 4 the centring phases reduce to (−1)^j on both sides.
    fn transform(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len() % self.n, 0, "buffer is not a whole number of lattice blocks");
        let s = 1.0 / (self.n as f64).sqrt();
        for block in data.chunks_mut(self.n) {
            for (j, v) in block.iter_mut().enumerate() {
                if j % 2 == 1 {
                    *v = -*v;
                }
            }
        }
        plan.process(data);
        for block in data.chunks_mut(self.n) {
            for (j, v) in block.iter_mut().enumerate() {
                *v *= if j % 2 == 1 { -s } else { s };
            }
        }
    }

    /// Applies g(P) to every contiguous block.
    pub fn momentum_multiply(&self, data: &mut [C64], g: &[C64]) {
        self.to_momentum(data);
        for block in data.chunks_mut(self.n) {
            for (v, w) in block.iter_mut().zip(g) {
                *v *= w;
            }
        }
        self.to_position(data);
    }
}

struct MomentumOp {
    lat: LatticeLine,
    g: Vec<C64>,
}

impl Operator for MomentumOp {
    fn dim(&self) -> usize {
        self.lat.n
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = x.to_vec();
        self.lat.momentum_multiply(&mut y, &self.g);
        y
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let g: Vec<C64> = self.g.iter().map(|v| v.conj()).collect();
        let mut y = x.to_vec();
        self.lat.momentum_multiply(&mut y, &g);
        y
    }
}

/// g(P) as a matrix-free operator.
pub fn momentum_function(lat: &LatticeLine, g: impl Fn(f64) -> C64) -> LinOp {
    LinOp::free(MomentumOp { lat: lat.clone(), g: lat.ps().into_iter().map(g).collect() })
}

/// g(Q) as a diagonal operator.
pub fn position_function(lat: &LatticeLine, g: impl Fn(f64) -> C64) -> LinOp {
    LinOp::free(DiagOp::new(lat.qs().into_iter().map(g).collect()))
}

/// (Q, P) with Q diagonal and P = 𝔉* diag(p) 𝔉 for the centred unitary DFT 𝔉.
pub fn canonical_pair(l: &LatticeLine) -> (LinOp, LinOp) {
    (position_function(l, |q| C64::new(q, 0.0)), momentum_function(l, |p| C64::new(p, 0.0)))
}
