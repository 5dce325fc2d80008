//! The deformation parameter and the special functions Vθ and F_ħ.
//!
//! Vθ(x) = exp{(1/2πi) ∫₀^∞ log(1+a^{−θ}) da/(a+e^{−x})}, evaluated after the
//! substitution a = e^u. On the shifted line x − πi the integrand has a simple
//! pole at u = −x; the value there is the principal value plus the half-residue.

use std::f64::consts::PI;

use thiserror::Error;

use crate::par;
use crate::quad;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QexpError {
    #[error("deformation index k must be nonnegative, got {0}")]
    NegativeK(i64),
    #[error("invalid quantum exponential argument (r = {r}, rho = {rho})")]
    InvalidPoint { r: f64, rho: i8 },
    #[error("argument must be finite, got {0}")]
    NonFinite(f64),
    #[error("quadrature did not converge at x = {x} (error estimate {error:e}, worst segment at u = {at})")]
    NoConvergence { x: f64, error: f64, at: f64 },
    #[error("principal-value window around the pole at u = {pole} did not converge (error estimate {error:e})")]
    PoleInterval { pole: f64, error: f64 },
    #[error("invalid quadrature configuration: {0}")]
    Config(String),
}

/// (k, ħ = π/(2k+3), θ = 2π/ħ = 2(2k+3)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    pub k: u32,
    pub hbar: f64,
    pub theta: f64,
}

impl Deformation {
    pub fn new(k: i64) -> Result<Self, QexpError> {
        if k < 0 {
            return Err(QexpError::NegativeK(k));
        }
        let n = (2 * k + 3) as f64;
        Ok(Deformation { k: k as u32, hbar: PI / n, theta: 2.0 * n })
    }

    /// (−1)^k
    pub fn parity(&self) -> f64 {
        if self.k % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn make_deformation(k: i64) -> Result<Deformation, QexpError> {
    Deformation::new(k)
}

/// A point (r, ρ) of the joint spectrum Λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QexpPoint {
    pub r: f64,
    pub rho: i8,
}

impl QexpPoint {
    pub fn new(r: f64, rho: i8) -> Result<Self, QexpError> {
        let ok = if !r.is_finite() {
            return Err(QexpError::NonFinite(r));
        } else if r >= 0.0 {
            rho == 0
        } else {
            rho == 1 || rho == -1
        };
        if ok {
            Ok(QexpPoint { r, rho })
        } else {
            Err(QexpError::InvalidPoint { r, rho })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transformation {
    LogSubstitution,
}

/// `rel_tol` bounds the error of the unimodular result, so the exponent
/// integral is computed to absolute accuracy 2π·rel_tol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub max_subdiv: usize,
    pub transformation: Transformation,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-10, max_subdiv: 10_000, transformation: Transformation::LogSubstitution }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QexpError> {
        if !(self.rel_tol > 0.0) {
            return Err(QexpError::Config(format!("tolerance must be positive, got {}", self.rel_tol)));
        }
        if self.max_subdiv < 1 {
            return Err(QexpError::Config("at least one subdivision required".into()));
        }
        Ok(())
    }
}

/// log(1 + e^{−θu}) without overflow.
pub(crate) fn log1p_exp_neg(u: f64, theta: f64) -> f64 {
    let t = theta * u;
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

const TAIL: f64 = 45.0;

fn breakpoints(x: f64, theta: f64) -> Vec<f64> {
    let lo = 0f64.min(-x) - TAIL;
    let hi = 0f64.max(-x) + TAIL / theta;
    let mut pts = vec![lo, 0f64.min(-x), 0f64.max(-x), hi];
    pts.dedup();
    pts
}

/// ∫ log(1+e^{−θu}) · logistic(u+x) du, the exponent of Vθ(x) up to −1/(2π).
pub fn exponent_integral(d: &Deformation, x: f64, cfg: &QuadConfig) -> Result<f64, QexpError> {
    if !x.is_finite() {
        return Err(QexpError::NonFinite(x));
    }
    cfg.validate()?;
    let th = d.theta;
    let r = quad::integrate(
        |u| log1p_exp_neg(u, th) * logistic(u + x),
        &breakpoints(x, th),
        2.0 * PI * cfg.rel_tol,
        cfg.max_subdiv,
    );
    if !r.converged {
        return Err(QexpError::NoConvergence { x, error: r.error, at: r.worst });
    }
    Ok(r.value)
}

/// Principal value of ∫ log(1+e^{−θu}) / (1 − e^{−(u+x)}) du.
pub fn shifted_principal_value(d: &Deformation, x: f64, cfg: &QuadConfig) -> Result<f64, QexpError> {
    if !x.is_finite() {
        return Err(QexpError::NonFinite(x));
    }
    cfg.validate()?;
    let th = d.theta;
    let tol = 2.0 * PI * cfg.rel_tol;
    let pole = -x;
    let w = 1.0;
    // h(pole+v) + h(pole−v) on (0, w]
    let folded = |v: f64| {
        let lp = log1p_exp_neg(pole + v, th);
        let lm = log1p_exp_neg(pole - v, th);
        (lp - lm) / (-(-v).exp_m1()) + lm
    };
    let mut wpts = vec![0.0, w];
    if (-pole).abs() < w && pole != 0.0 {
        wpts = vec![0.0, (-pole).abs(), w];
    }
    let inner = quad::integrate(folded, &wpts, 0.5 * tol, cfg.max_subdiv);
    if !inner.converged {
        return Err(QexpError::PoleInterval { pole, error: inner.error });
    }
    let h = |u: f64| log1p_exp_neg(u, th) / (-(-(u + x)).exp_m1());
    let all = breakpoints(x, th);
    let (lo, hi) = (all[0], all[all.len() - 1]);
    let mut left = vec![lo];
    let mut right = vec![pole + w];
    if 0.0 < pole - w {
        left.push(0.0);
    }
    left.push(pole - w);
    if 0.0 > pole + w {
        right.push(0.0);
    }
    right.push(hi.max(pole + w + 1.0));
    let a = quad::integrate(h, &left, 0.25 * tol, cfg.max_subdiv);
    let b = quad::integrate(h, &right, 0.25 * tol, cfg.max_subdiv);
    for r in [a, b] {
        if !r.converged {
            return Err(QexpError::NoConvergence { x, error: r.error, at: r.worst });
        }
    }
    Ok(inner.value + a.value + b.value)
}

pub fn theta_fn(d: &Deformation, x: f64, cfg: &QuadConfig) -> Result<C64, QexpError> {
    let i = exponent_integral(d, x, cfg)?;
    Ok(C64::from_polar(1.0, -i / (2.0 * PI)))
}

/// Vθ(x − πi).
pub fn theta_fn_shifted(d: &Deformation, x: f64, cfg: &QuadConfig) -> Result<C64, QexpError> {
    let pv = shifted_principal_value(d, x, cfg)?;
    let modulus = (-0.5 * log1p_exp_neg(-x, d.theta)).exp();
    Ok(C64::from_polar(modulus, -pv / (2.0 * PI)))
}

/// F_ħ(r, ρ).
pub fn qexp(d: &Deformation, p: QexpPoint, cfg: &QuadConfig) -> Result<C64, QexpError> {
    let p = QexpPoint::new(p.r, p.rho)?;
    if p.r > 0.0 {
        theta_fn(d, p.r.ln(), cfg)
    } else if p.r == 0.0 {
        Ok(C64::new(1.0, 0.0))
    } else {
        let x = (-p.r).ln();
        Ok(negative_branch(shifted_principal_value(d, x, cfg)?, x, p.rho, d.theta))
    }
}

// e^{iα}(cos χ + iρ sin χ) with α = −PV/2π and tan χ = |r|^{θ/2}
fn negative_branch(pv: f64, x: f64, rho: i8, theta: f64) -> C64 {
    let chi = (0.5 * theta * x).exp().atan();
    C64::from_polar(1.0, -pv / (2.0 * PI)) * C64::new(chi.cos(), rho as f64 * chi.sin())
}

/// Both branch values needed at one |r| = e^x: F(e^x, 0) and the unimodular
/// phase e^{iα} and angle χ of the negative branch, so that
/// F(−e^x, ρ) = e^{iα}(cos χ + iρ sin χ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchValues {
    pub positive: C64,
    pub neg_phase: C64,
    pub chi: f64,
}

impl BranchValues {
    pub fn negative(&self, rho: f64) -> C64 {
        self.neg_phase * C64::new(self.chi.cos(), rho * self.chi.sin())
    }
}

/// A configured evaluator; cheap to copy and safe to share.
#[derive(Debug, Clone, Copy)]
pub struct Qexp {
    pub def: Deformation,
    pub cfg: QuadConfig,
}

impl Qexp {
    pub fn new(def: Deformation) -> Self {
        Qexp { def, cfg: QuadConfig::default() }
    }

    pub fn with_config(def: Deformation, cfg: QuadConfig) -> Self {
        Qexp { def, cfg }
    }

    pub fn v(&self, x: f64) -> Result<C64, QexpError> {
        theta_fn(&self.def, x, &self.cfg)
    }

    pub fn v_shifted(&self, x: f64) -> Result<C64, QexpError> {
        theta_fn_shifted(&self.def, x, &self.cfg)
    }

    pub fn f(&self, r: f64, rho: i8) -> Result<C64, QexpError> {
        qexp(&self.def, QexpPoint { r, rho }, &self.cfg)
    }

    pub fn branches(&self, x: f64) -> Result<BranchValues, QexpError> {
        let positive = self.v(x)?;
        let pv = shifted_principal_value(&self.def, x, &self.cfg)?;
        Ok(BranchValues {
            positive,
            neg_phase: C64::from_polar(1.0, -pv / (2.0 * PI)),
            chi: (0.5 * self.def.theta * x).exp().atan(),
        })
    }

    /// F evaluated at a real argument with the branch picked by sign:
    /// `rho` is ignored for r ≥ 0.
    pub fn f_signed(&self, r: f64, rho: f64) -> Result<C64, QexpError> {
        if r >= 0.0 {
            self.f(r, 0)
        } else {
            self.f(r, if rho >= 0.0 { 1 } else { -1 })
        }
    }

    pub fn table_v(&self, xs: &[f64]) -> Result<Vec<C64>, QexpError> {
        par::map(xs, |&x| self.v(x)).into_iter().collect()
    }

    pub fn table_branches(&self, xs: &[f64]) -> Result<Vec<BranchValues>, QexpError> {
        par::map(xs, |&x| self.branches(x)).into_iter().collect()
    }

    pub fn table_f(&self, pts: &[QexpPoint]) -> Result<Vec<C64>, QexpError> {
        par::map(pts, |p| qexp(&self.def, *p, &self.cfg)).into_iter().collect()
    }
}
