//! Unitary representations V of the quantum "ax+b" group on 𝒦⊗ℋ:
//! building V from parameters (c, d, δ), checking W₂₃V₁₂ = V₁₂V₁₃W₂₃, and
//! recovering (c, d, δ) from V.
//!
//! Vectors on 𝒦⊗ℋ are indexed κ·2N + s·N + j.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::deformation::{Deformation, Qexp, QexpError};
use crate::group::{phi_eval_with, phi_packet, phi_window, GroupError, MultUnitary, PhiPacket};
use crate::linalg::calc::{asymmetry, hermitian_eigen};
use crate::linalg::op::{diff_norm, gemm, kron, norm, pauli_x, pauli_z};
use crate::linalg::{leg_embed, DefectStats, LinOp, LinalgError, Operator};
use crate::pairs::product::tensor;
use crate::pairs::{mpair_from_taus, qexp_of_pair, GTriple, MPairDefects, PairError, StandardModel};
use crate::{par, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Qexp(#[from] QexpError),
    #[error("invalid parameters: {what} (defect {value:e})")]
    Params { what: &'static str, value: f64 },
    #[error("phi_t(V) is not a one-parameter group (residual {residual:e}, tolerance {tolerance:e})")]
    GroupLaw { residual: f64, tolerance: f64 },
    #[error("phases of phi_t(V) are not affine in t (residual {0:e})")]
    Stone(f64),
    #[error("restricted blocks do not commute (defect {0:e})")]
    NotCommuting(f64),
    #[error("no branch of F fits eigenline {line} (best error {error:e})")]
    CurveFit { line: usize, error: f64 },
    #[error("inconsistent branch assignment: {0}")]
    Branch(String),
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// (c, d, δ): c > 0, (d, δ) an M-pair, cδ = δc, on a finite 𝒦.
#[derive(Debug, Clone)]
pub struct RepParams {
    pub c: DMatrix<C64>,
    pub d: DMatrix<C64>,
    pub delta: DMatrix<C64>,
    pub def: Deformation,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamReport {
    pub c_min_eigenvalue: f64,
    pub c_asymmetry: f64,
    /// max over t of ‖|c|^{it} d |c|^{−it} − e^{ħt} d‖ / ‖d‖; zero when d = 0.
    pub c_zakrzewski: f64,
    pub c_delta: f64,
    pub pair: MPairDefects,
}

impl ParamReport {
    /// Everything the construction of V relies on (the ⋈ defect is reported only).
    pub fn structural_ok(&self) -> bool {
        self.c_min_eigenvalue > 0.0 && self.c_asymmetry <= 1e-10 && self.c_delta <= 1e-10 && self.pair.worst() <= 1e-10
    }
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

fn matrix_fn(m: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, j| vecs[(i, j)] * f(vals[j]));
    scaled * vecs.adjoint()
}

pub fn validate_params(p: &RepParams) -> ParamReport {
    let (vals, _) = hermitian_eigen(&p.c);
    let c_min = vals.first().copied().unwrap_or(0.0);
    let dn = p.d.norm();
    let mut zak = 0f64;
    if dn > 0.0 && c_min > 0.0 {
        for t in [0.5, 1.0, -1.0, 2.0] {
            let u = matrix_fn(&p.c, |x| C64::from_polar(1.0, t * x.ln()));
            let lhs = &u * &p.d * u.adjoint();
            zak = zak.max((lhs - &p.d * c((p.def.hbar * t).exp())).norm() / dn);
        }
    }
    let cd = (&p.c * &p.delta - &p.delta * &p.c).norm();
    ParamReport {
        c_min_eigenvalue: c_min,
        c_asymmetry: asymmetry(&p.c),
        c_zakrzewski: zak,
        c_delta: rel(cd, p.c.norm() * p.delta.norm()),
        pair: MPairDefects::measure(&p.d, &p.delta),
    }
}

#[derive(Debug, Clone)]
pub enum Provenance {
    Built(RepParams),
    External,
}

/// F_ħ block at lattice point j, acting on 𝒦⊗ℂ² (index κ·2 + s).
struct RepKernel {
    model: Arc<StandardModel>,
    k: usize,
    log_c: Vec<f64>,
    uc: DMatrix<C64>,
    blocks: Vec<DMatrix<C64>>,
}

impl RepKernel {
    fn h(&self) -> usize {
        self.model.dim()
    }

    fn mix_k(&self, x: &[C64], m: &DMatrix<C64>) -> Vec<C64> {
        let h = self.h();
        let mut y = vec![c(0.0); x.len()];
        // y[κ'] = Σ_κ m[κ', κ] x[κ]
        let a: Vec<C64> = (0..self.k * self.k).map(|i| m[(i / self.k, i % self.k)]).collect();
        gemm(self.k, self.k, h, &a, x, &mut y);
        y
    }

    /// e^{±(i/ħ) log c ⊗ P}.
    fn phase(&self, x: &[C64], sign: f64) -> Vec<C64> {
        let lat = &self.model.lat;
        let n = lat.n();
        let mut y = self.mix_k(x, &self.uc.adjoint());
        lat.to_momentum(&mut y);
        for (b, blk) in y.chunks_mut(n).enumerate() {
            let lam = self.log_c[b / 2];
            for (l, v) in blk.iter_mut().enumerate() {
                *v *= C64::from_polar(1.0, sign * lam * lat.p(l) / lat.hbar());
            }
        }
        lat.to_position(&mut y);
        self.mix_k(&y, &self.uc)
    }

    fn blocks(&self, x: &[C64], adjoint: bool) -> Vec<C64> {
        let n = self.model.n();
        let h = self.h();
        let mut y = x.to_vec();
        let mut buf = vec![c(0.0); 2 * self.k];
        for (j, b) in self.blocks.iter().enumerate() {
            for kk in 0..self.k {
                for s in 0..2 {
                    buf[kk * 2 + s] = x[kk * h + s * n + j];
                }
            }
            for r in 0..2 * self.k {
                let mut acc = c(0.0);
                for (col, v) in buf.iter().enumerate() {
                    acc += if adjoint { b[(col, r)].conj() } else { b[(r, col)] } * v;
                }
                y[(r / 2) * h + (r % 2) * n + j] = acc;
            }
        }
        y
    }
}

impl Operator for RepKernel {
    fn dim(&self) -> usize {
        self.k * self.h()
    }
    // V = F* · e^{(i/ħ) log c⊗log a}
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.blocks(&self.phase(x, 1.0), true)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.phase(&self.blocks(x, false), -1.0)
    }
}

/// A unitary on 𝒦⊗ℋ over the standard model.
#[derive(Clone)]
pub struct UnitaryRep {
    pub v: LinOp,
    pub k: usize,
    pub model: Arc<StandardModel>,
    pub provenance: Provenance,
}

impl fmt::Debug for UnitaryRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitaryRep(K = {}, N = {}, {:?})", self.k, self.model.n(), self.provenance)
    }
}

impl UnitaryRep {
    pub fn external(v: LinOp, model: Arc<StandardModel>) -> Result<Self, RepError> {
        let h = model.dim();
        if v.dim() % h != 0 || v.dim() == 0 {
            return Err(GroupError::Dimension { got: v.dim(), h }.into());
        }
        Ok(UnitaryRep { k: v.dim() / h, v, model, provenance: Provenance::External })
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn unitarity(&self, probes: &[Vec<C64>]) -> f64 {
        probes
            .iter()
            .map(|x| diff_norm(&self.v.apply_adjoint(&self.v.apply(x)), x) / norm(x))
            .fold(0.0, f64::max)
    }
}

/// V = F_ħ(d⊗b, (δ⊗β)χ(d⊗b<0))* e^{(i/ħ) log c⊗log a}.
pub fn build_rep(p: &RepParams, g: &GTriple) -> Result<UnitaryRep, RepError> {
    let model = g.model.clone().ok_or(PairError::NotStandard)?;
    let report = validate_params(p);
    if !report.structural_ok() {
        let (what, value) = if report.c_min_eigenvalue <= 0.0 {
            ("c positive", report.c_min_eigenvalue)
        } else if report.c_asymmetry > 1e-10 {
            ("c selfadjoint", report.c_asymmetry)
        } else if report.c_delta > 1e-10 {
            ("c delta = delta c", report.c_delta)
        } else {
            ("(d, delta) M-pair", report.pair.worst())
        };
        return Err(RepError::Params { what, value });
    }
    let k = p.c.nrows();
    let (log_c, uc) = {
        let (vals, vecs) = hermitian_eigen(&p.c);
        (vals.iter().map(|v| v.ln()).collect::<Vec<_>>(), vecs)
    };
    let q = Qexp::new(p.def);
    let tau = kron(&p.delta, &pauli_x());
    let sz = kron(&p.d, &pauli_z());
    let lat = model.lat.clone();
    let blocks = par::map_range(lat.n(), |j| {
        let t = &sz * c(lat.q(j).exp());
        qexp_of_pair(&q, &LinOp::Dense(t), &LinOp::Dense(tau.clone())).and_then(|u| Ok(u.to_dense()?))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let kern = RepKernel { model: model.clone(), k, log_c, uc, blocks };
    Ok(UnitaryRep { v: LinOp::free(kern), k, model, provenance: Provenance::Built(p.clone()) })
}

fn diag_c(v: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
}

/// Parameters with c = diag(e^{log_c}) and (d, δ) the canonical M-pair of `taus`;
/// dimensions of 𝒦 past 2·taus.len() form the kernel of d.
pub fn params_from_taus(def: Deformation, log_c: &[f64], taus: &[f64]) -> Result<RepParams, RepError> {
    let k = log_c.len();
    let m = 2 * taus.len();
    if k == 0 || k < m {
        return Err(RepError::Params { what: "log_c shorter than the tau blocks", value: k as f64 });
    }
    let mut d = DMatrix::zeros(k, k);
    let mut delta = DMatrix::zeros(k, k);
    if m > 0 {
        let pair = mpair_from_taus(taus)?;
        d.view_mut((0, 0), (m, m)).copy_from(&pair.b.to_dense()?);
        delta.view_mut((0, 0), (m, m)).copy_from(&pair.beta.to_dense()?);
    }
    let c = diag_c(&log_c.iter().map(|x| x.exp()).collect::<Vec<_>>());
    Ok(RepParams { c, d, delta, def })
}

/// Fixed parameter sets covering d = 0, mixed-sign d, a rotated block and a kernel.
pub fn reference_params(def: Deformation) -> Vec<(&'static str, RepParams)> {
    let h = def.hbar;
    let mk = |lc: &[f64], taus: &[f64]| params_from_taus(def, lc, taus).expect("reference parameters are valid");
    let mut rotated = mk(&[0.2, 0.2], &[3.0]);
    let th = 0.7f64;
    let u = DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(th.cos(), 0.0), C64::new(0.0, th.sin()), C64::new(0.0, th.sin()), C64::new(th.cos(), 0.0)],
    );
    rotated.d = &u * &rotated.d * u.adjoint();
    rotated.delta = &u * &rotated.delta * u.adjoint();
    vec![
        ("character", mk(&[0.4], &[])),
        ("d_zero", mk(&[0.5, -0.3], &[])),
        ("block_c_e_hbar", mk(&[h, h], &[1.0])),
        ("two_blocks", mk(&[0.3, 0.3, -0.6, -0.6], &[0.5, 2.0])),
        ("rotated_block", rotated),
        ("block_and_kernel", mk(&[0.1, 0.1, 0.7], &[1.5])),
    ]
}

/// Probe vectors κ ⊗ packet ⊗ packet on 𝒦⊗ℋ⊗ℋ.
pub fn rep_probes(model: &StandardModel, k: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = model.interior_probes(count + 1);
    (0..count)
        .map(|i| {
            let mut kv: Vec<C64> = (0..k).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let s = norm(&kv);
            kv.iter_mut().for_each(|x| *x /= s);
            tensor(&kv, &tensor(&p[i], &p[count - i]))
        })
        .collect()
}

/// max/mean of ‖(W₂₃V₁₂ − V₁₂V₁₃W₂₃)ψ‖.
pub fn rep_residual(v: &UnitaryRep, w: &MultUnitary, probes: &[Vec<C64>]) -> Result<DefectStats, RepError> {
    let h = w.model().dim();
    if v.model.dim() != h {
        return Err(GroupError::Dimension { got: v.model.dim(), h }.into());
    }
    let dims = [v.k, h, h];
    let v12 = leg_embed(&v.v, &[1, 2], &dims)?;
    let v13 = leg_embed(&v.v, &[1, 3], &dims)?;
    let w23 = leg_embed(&w.linop(), &[2, 3], &dims)?;
    let res = par::map(probes, |x| {
        let lhs = w23.apply(&v12.apply(x));
        let rhs = v12.apply(&v13.apply(&w23.apply(x)));
        diff_norm(&lhs, &rhs) / norm(x)
    });
    Ok(DefectStats {
        max: res.iter().cloned().fold(0.0, f64::max),
        mean: res.iter().sum::<f64>() / res.len().max(1) as f64,
        op_norm: None,
    })
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    /// Half-width M of the grid t_m = m·Δt, |m| ≤ M.
    pub grid: usize,
    pub group_law_tol: f64,
    pub stone_tol: f64,
    /// Range of q_j used for the b-spectral sweep.
    pub sweep: (f64, f64),
    pub sweep_points: usize,
    pub fit_tol: f64,
    pub seed: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            grid: 16,
            group_law_tol: 1e-3,
            stone_tol: 1e-3,
            sweep: (-14.0, 6.0),
            sweep_points: 48,
            fit_tol: 1e-5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Flat,
    Positive,
    Negative(i8),
}

#[derive(Debug, Clone)]
pub struct Eigenline {
    pub branch: Branch,
    /// Signed coefficient m with T-eigenvalue m·r on the sweep.
    pub m: f64,
    pub fit_error: f64,
}

#[derive(Debug, Clone)]
pub struct ExtractReport {
    pub dt: f64,
    pub group_law: f64,
    pub stone: f64,
    /// max over the t-grid of 1 − (smallest singular value of φ_t(V)).
    pub modulus_loss: f64,
    pub commutation: f64,
    pub lines: Vec<Eigenline>,
    pub params: ParamReport,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub params: RepParams,
    pub report: ExtractReport,
}

fn polar(u: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let svd = u.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    (svd.u.unwrap() * svd.v_t.unwrap(), smin)
}

/// Stage 1: log c from u(t) = φ_t(V) on a t-grid.
fn stage_log_c(v: &UnitaryRep, o: &ExtractOptions) -> Result<(DMatrix<C64>, f64, f64, f64, f64), RepError> {
    let m = &v.model;
    let k = v.k;
    let tmax = phi_window(m);
    if !(tmax > 0.0) {
        return Err(GroupError::Window { p: 0.0, limit: tmax * m.def.hbar }.into());
    }
    let grid = o.grid as i64;
    let tmax = tmax * (1.0 - 1e-9);
    let eval = |t: f64| -> Result<(DMatrix<C64>, f64), RepError> {
        let p: PhiPacket = phi_packet(m, t)?;
        Ok(polar(&phi_eval_with(&v.v, &p)?))
    };
    // prior estimate of ‖log c‖ from a short step
    let dt0 = tmax / (4.0 * grid as f64);
    let (u0, _) = eval(dt0)?;
    let s0 = (&u0 - u0.adjoint()) * C64::new(0.0, -0.5);
    let (v0, _) = hermitian_eigen(&s0);
    let est = v0.iter().fold(0f64, |a, x| a.max(x.abs())).min(1.0).asin() / dt0;
    let dt = if est > 0.0 { (1.2 / est).min(tmax / grid as f64) } else { tmax / grid as f64 };
    let ms: Vec<i64> = (-grid..=grid).collect();
    let us = par::map(&ms, |&mm| eval(mm as f64 * dt)).into_iter().collect::<Result<Vec<_>, _>>()?;
    let at = |mm: i64| &us[(mm + grid) as usize].0;
    let modulus_loss = us.iter().map(|(_, s)| 1.0 - s).fold(0.0, f64::max);
    let mut law = 0f64;
    for a in -grid..=grid {
        for b in -grid..=grid {
            if (a + b).abs() <= grid {
                law = law.max((at(a + b) - at(a) * at(b)).norm());
            }
        }
    }
    if !(law <= o.group_law_tol) {
        return Err(RepError::GroupLaw { residual: law, tolerance: o.group_law_tol });
    }
    // ‖log c‖Δt < π/2, so sin(Δt log c) determines the eigenvectors
    let u1 = at(1);
    let s1 = (u1 - u1.adjoint()) * C64::new(0.0, -0.5);
    let (_, vecs) = hermitian_eigen(&s1);
    let mut lams = Vec::with_capacity(k);
    let mut stone = 0f64;
    for i in 0..k {
        let e = vecs.column(i).into_owned();
        let phase = |mm: i64| (e.adjoint() * at(mm) * &e)[(0, 0)].arg();
        let mut th = vec![0f64; ms.len()];
        let zero = grid as usize;
        th[zero] = phase(0);
        for dir in [1i64, -1] {
            let mut prev = th[zero];
            for step in 1..=grid {
                let mm = dir * step;
                let mut x = phase(mm);
                while x - prev > std::f64::consts::PI {
                    x -= 2.0 * std::f64::consts::PI;
                }
                while prev - x > std::f64::consts::PI {
                    x += 2.0 * std::f64::consts::PI;
                }
                th[(mm + grid) as usize] = x;
                prev = x;
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (idx, &mm) in ms.iter().enumerate() {
            num += mm as f64 * dt * th[idx];
            den += (mm as f64 * dt).powi(2);
        }
        let lam = num / den;
        for (idx, &mm) in ms.iter().enumerate() {
            stone = stone.max((th[idx] - lam * mm as f64 * dt).abs());
        }
        lams.push(lam);
    }
    if !(stone <= o.stone_tol) {
        return Err(RepError::Stone(stone));
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| vecs[(i, j)] * lams[j]);
    Ok((scaled * vecs.adjoint(), dt, law, stone, modulus_loss))
}

/// V·e^{−(i/ħ) log ĉ⊗log a}.
fn canonical_factor(v: &UnitaryRep, log_c: &DMatrix<C64>) -> LinOp {
    let (vals, uc) = hermitian_eigen(log_c);
    let kern = RepKernel { model: v.model.clone(), k: v.k, log_c: vals, uc, blocks: Vec::new() };
    let vv = v.v.clone();
    let kern = Arc::new(kern);
    let (k1, k2) = (kern.clone(), kern);
    let v2 = vv.clone();
    LinOp::from_fns(vv.dim(), move |x| vv.apply(&k1.phase(x, -1.0)), move |x| k2.phase(&v2.apply_adjoint(x), 1.0))
}

fn line_value(q: &Qexp, br: Branch, logm: f64, qj: f64) -> Result<C64, QexpError> {
    match br {
        Branch::Flat => Ok(c(1.0)),
        Branch::Positive => q.v(logm + qj),
        Branch::Negative(rho) => Ok(q.branches(logm + qj)?.negative(rho as f64)),
    }
}

fn fit_error(q: &Qexp, br: Branch, logm: f64, qs: &[f64], target: &[C64]) -> f64 {
    qs.iter()
        .zip(target)
        .map(|(&qj, t)| line_value(q, br, logm, qj).map(|v| (v - t).norm()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Scan log|m| then shrink the bracket around the best value.
fn fit_branch(q: &Qexp, br: Branch, qs: &[f64], target: &[C64]) -> (f64, f64) {
    let (lo, hi, steps) = (-12.0, 12.0, 96);
    let h = (hi - lo) / steps as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let x = lo + h * i as f64;
        let e = fit_error(q, br, x, qs, target);
        if e < best.0 {
            best = (e, x);
        }
    }
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (fit_error(q, br, x1, qs, target), fit_error(q, br, x2, qs, target));
    while b - a > 1e-11 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = fit_error(q, br, x1, qs, target);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = fit_error(q, br, x2, qs, target);
        }
    }
    let x = 0.5 * (a + b);
    (x, fit_error(q, br, x, qs, target))
}

pub fn extract_params(v: &UnitaryRep, def: Deformation, o: &ExtractOptions) -> Result<Extraction, RepError> {
    let (log_c, dt, law, stone, modulus_loss) = stage_log_c(v, o)?;
    let f = canonical_factor(v, &log_c);
    let m = &v.model;
    let (n, h, k) = (m.n(), m.dim(), v.k);
    let lat = &m.lat;
    let js: Vec<usize> = {
        let (lo, hi) = (o.sweep.0.max(lat.q(0)), o.sweep.1.min(lat.q(n - 1)));
        let all: Vec<usize> = (0..n).filter(|&j| lat.q(j) >= lo && lat.q(j) <= hi).collect();
        let stride = (all.len() / o.sweep_points.max(1)).max(1);
        all.into_iter().step_by(stride).collect()
    };
    // 2K×2K restrictions of f to 𝒦⊗ℂ²⊗δ_j
    let cols = par::map_range(2 * k, |col| {
        js.iter()
            .map(|&j| {
                let mut x = vec![c(0.0); k * h];
                x[(col / 2) * h + (col % 2) * n + j] = c(1.0);
                let y = f.apply(&x);
                (0..2 * k).map(|r| y[(r / 2) * h + (r % 2) * n + j]).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    let blocks: Vec<DMatrix<C64>> =
        (0..js.len()).map(|i| DMatrix::from_fn(2 * k, 2 * k, |r, col| cols[col][i][r])).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut hsum = DMatrix::zeros(2 * k, 2 * k);
    for b in &blocks {
        let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        hsum += (b + b.adjoint()) * c(x) + (b - b.adjoint()) * C64::new(0.0, y);
    }
    let (_, w) = hermitian_eigen(&hsum);
    let mut commutation = 0f64;
    for b in &blocks {
        let dmat = w.adjoint() * b * &w;
        let off: f64 = (0..2 * k)
            .flat_map(|i| (0..2 * k).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| dmat[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        commutation = commutation.max(off);
    }
    if commutation > 1e-6 {
        return Err(RepError::NotCommuting(commutation));
    }
    let q = Qexp::new(def);
    let qs: Vec<f64> = js.iter().map(|&j| lat.q(j)).collect();
    let fitted = par::map_range(2 * k, |l| {
        let e = w.column(l).into_owned();
        // f = F*, so F's eigenvalue is the conjugate
        let target: Vec<C64> = blocks.iter().map(|b| (e.adjoint() * b * &e)[(0, 0)].conj()).collect();
        let flat = target.iter().map(|t| (t - c(1.0)).norm()).fold(0.0, f64::max);
        if flat < o.fit_tol {
            return Ok(Eigenline { branch: Branch::Flat, m: 0.0, fit_error: flat });
        }
        let mut best: Option<Eigenline> = None;
        for br in [Branch::Positive, Branch::Negative(1), Branch::Negative(-1)] {
            let (x, err) = fit_branch(&q, br, &qs, &target);
            let m = if br == Branch::Positive { x.exp() } else { -x.exp() };
            if best.as_ref().is_none_or(|b| err < b.fit_error) {
                best = Some(Eigenline { branch: br, m, fit_error: err });
            }
        }
        let best = best.expect("three candidates");
        if best.fit_error > o.fit_tol {
            return Err(RepError::CurveFit { line: l, error: best.fit_error });
        }
        Ok(best)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    // ρ = ±1 lines come in pairs with equal |m|
    let mut plus: Vec<f64> = fitted.iter().filter(|l| l.branch == Branch::Negative(1)).map(|l| l.m).collect();
    let mut minus: Vec<f64> = fitted.iter().filter(|l| l.branch == Branch::Negative(-1)).map(|l| l.m).collect();
    if plus.len() != minus.len() {
        return Err(RepError::Branch(format!("{} lines with rho = +1, {} with rho = -1", plus.len(), minus.len())));
    }
    plus.sort_by(f64::total_cmp);
    minus.sort_by(f64::total_cmp);
    for (a, b) in plus.iter().zip(&minus) {
        if (a - b).abs() > 1e-4 * a.abs() {
            return Err(RepError::Branch(format!("unpaired negative lines m = {a} and {b}")));
        }
    }
    let mut tm = DMatrix::zeros(2 * k, 2 * k);
    let mut phi = DMatrix::zeros(2 * k, 2 * k);
    for (l, line) in fitted.iter().enumerate() {
        let e = w.column(l).into_owned();
        let pr = &e * e.adjoint();
        tm += &pr * c(line.m);
        if let Branch::Negative(rho) = line.branch {
            phi += &pr * c(rho as f64);
        }
    }
    // T/r = d⊗σ_z and φ = (δ⊗σ_x)χ(d⊗σ_z<0), indexed κ·2 + s
    let sub = |m: &DMatrix<C64>, s: usize, t: usize| DMatrix::from_fn(k, k, |i, j| m[(i * 2 + s, j * 2 + t)]);
    let d = (sub(&tm, 0, 0) - sub(&tm, 1, 1)) * c(0.5);
    let delta = sub(&phi, 0, 1) + sub(&phi, 1, 0);
    let d = (&d + d.adjoint()) * c(0.5);
    let delta = (&delta + delta.adjoint()) * c(0.5);
    let cm = matrix_fn(&log_c, |x| c(x.exp()));
    let params = RepParams { c: cm, d, delta, def };
    let report = ExtractReport {
        dt,
        group_law: law,
        stone,
        modulus_loss,
        commutation,
        lines: fitted,
        params: validate_params(&params),
    };
    Ok(Extraction { params, report })
}

/// Haar-random unitary on 𝒦⊗ℋ, as a rejection control for `extract_params`.
pub fn random_unitary(dim: usize, seed: u64) -> Result<LinOp, RepError> {
    if dim > crate::linalg::op::DENSE_LIMIT {
        return Err(LinalgError::TooLarge(dim).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        C64::new(a, b)
    });
    let qr = g.qr();
    let (qm, r) = (qr.q(), qr.r());
    let ph = DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::from_polar(1.0, r[(i, i)].arg()) } else { c(0.0) });
    Ok(LinOp::Dense(qm * ph))
}

/// Sorted eigenvalues, for spectrum comparisons.
pub fn spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// max_i |a_i − b_i| / max(|b_i|, floor) over sorted spectra.
pub fn spectrum_error(a: &DMatrix<C64>, b: &DMatrix<C64>, floor: f64) -> f64 {
    let (x, y) = (spectrum(a), spectrum(b));
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(&y).map(|(p, q)| (p - q).abs() / q.abs().max(floor)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::gtriple_standard;

    fn setup(n: usize) -> (GTriple, Deformation) {
        let d = Deformation::new(0).unwrap();
        let model = StandardModel::balanced(n, d).unwrap();
        (gtriple_standard(&model.lat, d).unwrap(), d)
    }

    fn diag(v: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i]) } else { c(0.0) })
    }

    #[test]
    fn trivial_params_give_identity() {
        let (g, def) = setup(64);
        let p = RepParams { c: diag(&[1.0]), d: diag(&[0.0]), delta: diag(&[0.0]), def };
        let r = validate_params(&p);
        assert_eq!(r.c_zakrzewski, 0.0);
        assert!(r.structural_ok());
        let v = build_rep(&p, &g).unwrap();
        for x in g.model.as_ref().unwrap().interior_probes(3) {
            assert!(diff_norm(&v.v.apply(&x), &x) < 1e-12);
        }
    }

    #[test]
    fn built_rep_is_unitary_and_block_validates() {
        let (g, def) = setup(64);
        let pair = mpair_from_taus(&[1.0]).unwrap();
        let p = RepParams {
            c: diag(&[def.hbar.exp(), def.hbar.exp()]),
            d: pair.b.to_dense().unwrap(),
            delta: pair.beta.to_dense().unwrap(),
            def,
        };
        let r = validate_params(&p);
        assert!(r.c_delta == 0.0 && r.structural_ok());
        // a finite 𝒦 cannot carry c ⋈ d with d ≠ 0
        assert!(r.c_zakrzewski > 0.1);
        let v = build_rep(&p, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = crate::linalg::op::random_unit(v.dim(), &mut rng);
        assert!(v.unitarity(&[x]) < 1e-10);
        assert!(v.v.adjoint_consistency(2, 4) < 1e-10);
    }

    #[test]
    fn incompatible_c_reported() {
        let def = Deformation::new(0).unwrap();
        let pair = mpair_from_taus(&[1.0]).unwrap();
        let p = RepParams {
            c: diag(&[def.hbar.exp(), (2.0 * def.hbar).exp()]),
            d: pair.b.to_dense().unwrap(),
            delta: pair.beta.to_dense().unwrap(),
            def,
        };
        let r = validate_params(&p);
        assert!(r.c_delta > 1e-3 && r.c_zakrzewski > 1e-3);
        assert!(!r.structural_ok());
    }

    #[test]
    fn character_round_trip() {
        let (g, def) = setup(128);
        let p = RepParams { c: diag(&[0.5f64.exp(), (-0.3f64).exp()]), d: diag(&[0.0, 0.0]), delta: diag(&[0.0, 0.0]), def };
        let v = build_rep(&p, &g).unwrap();
        let e = extract_params(&v, def, &ExtractOptions::default()).unwrap();
        let lc = matrix_fn(&e.params.c, |x| c(x.ln()));
        assert!(spectrum_error(&lc, &diag(&[0.5, -0.3]), 1e-3) < 1e-3, "{:?}", spectrum(&lc));
        assert_eq!(e.params.d.norm(), 0.0);
        assert!(e.report.lines.iter().all(|l| l.branch == Branch::Flat));
    }

    #[test]
    fn block_round_trip_and_rejection() {
        let (g, def) = setup(128);
        let pair = mpair_from_taus(&[1.0]).unwrap();
        let p = RepParams {
            c: diag(&[0.4f64.exp(), 0.4f64.exp()]),
            d: pair.b.to_dense().unwrap(),
            delta: pair.beta.to_dense().unwrap(),
            def,
        };
        let v = build_rep(&p, &g).unwrap();
        let e = extract_params(&v, def, &ExtractOptions::default()).unwrap();
        assert!(spectrum_error(&e.params.c, &p.c, 1e-3) < 1e-6);
        assert!(spectrum_error(&e.params.d, &p.d, 1e-3) < 1e-6);
        assert!((&e.params.delta - &p.delta).norm() < 1e-8);
        let model = g.model.clone().unwrap();
        let rnd = UnitaryRep::external(random_unitary(model.dim(), 3).unwrap(), model).unwrap();
        assert!(matches!(extract_params(&rnd, def, &ExtractOptions::default()), Err(RepError::GroupLaw { .. })));
    }

    #[test]
    fn character_residual_trend() {
        let mut rows = vec![];
        for n in [32, 64] {
            let (g, def) = setup(n);
            let model = g.model.clone().unwrap();
            let p = RepParams { c: diag(&[0.6f64.exp()]), d: diag(&[0.0]), delta: diag(&[0.0]), def };
            let v = build_rep(&p, &g).unwrap();
            let w = MultUnitary::new(model.clone(), &crate::deformation::Qexp::new(def)).unwrap();
            rows.push((n, rep_residual(&v, &w, &rep_probes(&model, 1, 3, 1)).unwrap().max));
        }
        eprintln!("rep residual {rows:?}");
        assert!(crate::convergence::Trend::new(rows).decreasing(1.5));
    }

    #[test]
    fn params_from_taus_layout() {
        let def = Deformation::new(0).unwrap();
        let p = params_from_taus(def, &[0.1, 0.1, 0.7], &[1.5]).unwrap();
        assert_eq!(p.d[(0, 0)], c(1.5));
        assert_eq!(p.d[(1, 1)], c(-1.5));
        assert_eq!(p.d[(2, 2)], c(0.0));
        assert_eq!(p.delta[(0, 1)], c(1.0));
        assert!(validate_params(&p).structural_ok());
        assert!(params_from_taus(def, &[0.1], &[1.0]).is_err());
        assert_eq!(reference_params(def).len(), 6);
    }
}
