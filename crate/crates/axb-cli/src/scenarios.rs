//! Scenario drivers. Each returns a Report; numerical failures become failed
//! checks, while bad configuration or infeasible sizes are errors.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qaxb::convergence::Trend;
use qaxb::deformation::{theta_fn, theta_fn_shifted, Qexp, QuadConfig};
use qaxb::group::{comultiply, pentagon_probes, pentagon_residual, MultUnitary};
use qaxb::linalg::op::{random_unit, DENSE_LIMIT};
use qaxb::linalg::{inverse_z, leg_embed, relative_defect, z_transform, LinOp};
use qaxb::oracle::RayOracle;
use qaxb::pairs::lemma::LemmaCheck;
use qaxb::pairs::{gtriple_standard, mpair_from_taus, PairQexp, StandardModel, ZakrzewskiModel};
use qaxb::reps::{
    build_rep, extract_params, params_from_taus, random_unitary, reference_params, rep_probes, rep_residual,
    spectrum_error, validate_params, ExtractOptions, RepError, RepParams, UnitaryRep,
};
use qaxb::C64;

use crate::config::ScenarioConfig;
use crate::report::Report;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    Zakrzewski,
    Lemma1,
    Pentagon,
    DeltaA,
    DeltaB,
    Roundtrip,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Zakrzewski => "zakrzewski",
            Scenario::Lemma1 => "lemma1",
            Scenario::Pentagon => "pentagon",
            Scenario::DeltaA => "delta_a",
            Scenario::DeltaB => "delta_b",
            Scenario::Roundtrip => "roundtrip",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        <Self as clap::ValueEnum>::from_str(s, true).map_err(|_| CliError::Config(format!("run.scenario: unknown scenario {s}")))
    }

    /// Complex entries of the largest state vector at lattice size n.
    fn state_size(self, n: usize, k: usize) -> usize {
        let h = 2 * n;
        match self {
            Scenario::Zakrzewski => h,
            Scenario::DeltaA | Scenario::DeltaB => h * h,
            Scenario::Lemma1 => 2 * h * h,
            Scenario::Pentagon => h * h * h,
            Scenario::Roundtrip => (k * h).max(h * h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RepAction {
    Build,
    Verify,
    Extract,
}

fn guard(cfg: &ScenarioConfig, what: &str, size: usize) -> Result<(), CliError> {
    if size > cfg.lattice.max_state {
        return Err(CliError::Infeasible(format!(
            "{what} needs state vectors of {size} entries, above lattice.max_state = {}",
            cfg.lattice.max_state
        )));
    }
    Ok(())
}

/// Runs `f` for each N and records the table plus a final-value and a trend check.
fn sweep<E: std::fmt::Display>(
    r: &mut Report,
    name: &str,
    ns: &[usize],
    tol: Option<f64>,
    factor: Option<f64>,
    mut f: impl FnMut(usize) -> Result<f64, E>,
) {
    let t = Instant::now();
    let mut rows = vec![];
    let mut err = None;
    for &n in ns {
        match f(n) {
            Ok(v) => rows.push((n, v)),
            Err(e) => {
                err = Some(format!("N = {n}: {e}"));
                break;
            }
        }
    }
    let ms = t.elapsed().as_millis() as u64;
    let trend = Trend::new(rows.clone());
    r.table(name, rows);
    let fail = |e: &Option<String>| e.clone().map_or(Ok(()), Err);
    if let Some(tol) = tol {
        r.push(&format!("{name}_final"), fail(&err).and_then(|_| trend.last().ok_or_else(|| "empty".into())), tol, |v| v <= tol, ms);
    }
    // a single size has no trend to judge
    if let (Some(factor), true) = (factor, ns.len() > 1) {
        let bound = 1.0 / factor;
        let strict = factor == 1.0;
        r.push(
            &format!("{name}_trend"),
            fail(&err).map(|_| trend.worst_ratio()),
            bound,
            |v| if strict { v < bound } else { v <= bound },
            0,
        );
    }
}

pub fn selftest(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    let def = cfg.deformation()?;
    let tol = &cfg.tolerances;
    let quad = QuadConfig::default();
    let mut r = Report::new("selftest", cfg);
    let xs: Vec<f64> = (0..65).map(|i| -8.0 + 0.25 * i as f64).collect();
    r.check("vtheta_modulus", tol.vtheta, || {
        xs.iter().try_fold(0f64, |m, &x| Ok::<_, qaxb::QexpError>(m.max((theta_fn(&def, x, &quad)?.norm() - 1.0).abs())))
    });
    // |V(x − πi)|²(1 + e^{θx}) = 1
    r.check("vtheta_shifted_modulus", tol.vtheta, || {
        xs.iter().try_fold(0f64, |m, &x| {
            let v = theta_fn_shifted(&def, x, &quad)?;
            Ok::<_, qaxb::QexpError>(m.max((v.norm_sqr() * (1.0 + (def.theta * x).exp()) - 1.0).abs()))
        })
    });
    let oracle = RayOracle::new(def.theta);
    let grid: Vec<f64> = (0..100).map(|i| -8.0 + 16.0 * i as f64 / 99.0).collect();
    r.check("oracle_real_axis", tol.oracle, || {
        grid.iter().try_fold(0f64, |m, &x| {
            let want = oracle.v(x);
            Ok::<_, qaxb::QexpError>(m.max((theta_fn(&def, x, &quad)? - want).norm() / want.norm()))
        })
    });
    r.check("oracle_shifted_line", tol.oracle, || {
        grid.iter().try_fold(0f64, |m, &x| {
            let want = oracle.v_shifted(x);
            Ok::<_, qaxb::QexpError>(m.max((theta_fn_shifted(&def, x, &quad)? - want).norm() / want.norm()))
        })
    });
    let q = Qexp::new(def);
    r.check("negative_branch_modulus", tol.negative_branch, || {
        let mut m = 0f64;
        for i in 0..25 {
            let x = -(10f64.powf(-3.0 + 6.0 * i as f64 / 24.0));
            for rho in [1, -1] {
                m = m.max((q.f(x, rho)?.norm() - 1.0).abs());
            }
        }
        Ok::<_, qaxb::QexpError>(m)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let tau_sets: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..rng.gen_range(1..5)).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..20.0) }).collect())
        .collect();
    r.check("mpair_from_taus", tol.exact, || {
        tau_sets.iter().try_fold(0f64, |m, t| Ok::<_, qaxb::pairs::PairError>(m.max(mpair_from_taus(t)?.defects.worst())))
    });
    let mats: Vec<DMatrix<C64>> = (0..100)
        .map(|_| {
            let n = rng.gen_range(2..9);
            let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
            (&m + m.adjoint()) * C64::new(0.5, 0.0)
        })
        .collect();
    r.check("z_round_trip", tol.exact, || {
        mats.iter().try_fold(0f64, |m, t| {
            let back = inverse_z(&z_transform(&LinOp::Dense(t.clone()))?)?.to_dense()?;
            Ok::<_, qaxb::linalg::LinalgError>(m.max((back - t).norm() / t.norm().max(1.0)))
        })
    });
    Ok(r)
}

fn tensor_square(m: &StandardModel, x: &LinOp) -> Result<LinOp, qaxb::linalg::LinalgError> {
    let d = m.dim();
    LinOp::product(&[leg_embed(x, &[1], &[d, d])?.into_linop(), leg_embed(x, &[2], &[d, d])?.into_linop()])
}

fn mult_unitary(m: &Arc<StandardModel>) -> Result<MultUnitary, qaxb::pairs::PairError> {
    MultUnitary::new(m.clone(), &Qexp::new(m.def))
}

pub fn converge(cfg: &ScenarioConfig, s: Scenario) -> Result<Report, CliError> {
    let ns = if s == Scenario::Pentagon { &cfg.pentagon.n } else { &cfg.lattice.n };
    let kmax = reference_params(cfg.deformation()?).iter().map(|p| p.1.c.nrows()).max().unwrap_or(1);
    for &n in ns {
        guard(cfg, &format!("{} at N = {n}", s.name()), s.state_size(n, kmax))?;
        cfg.model(n)?;
    }
    let tol = &cfg.tolerances;
    let probes = cfg.packets.probes;
    let mut r = Report::new(s.name(), cfg);
    let model = |n| cfg.model(n).map_err(|e| e.to_string());
    match s {
        Scenario::Zakrzewski => sweep(&mut r, "zakrzewski", ns, Some(tol.zakrzewski), Some(tol.factor), |n| {
            let m = model(n)?;
            let z = ZakrzewskiModel::new(m.clone());
            Ok::<_, String>(z.defect(&m.interior_probes(probes), &z.shifts).max)
        }),
        Scenario::Lemma1 => sweep(&mut r, "lemma1", ns, Some(tol.lemma1), Some(tol.factor), |n| {
            let m = model(n)?;
            let px = PairQexp::new(m.clone(), &Qexp::new(m.def)).map_err(|e| e.to_string())?;
            let l = LemmaCheck::new(Arc::new(px), 1.0).map_err(|e| e.to_string())?;
            Ok::<_, String>(l.residual(&l.probes(probes)).max)
        }),
        Scenario::Pentagon => sweep(&mut r, "pentagon", ns, None, Some(1.0), |n| {
            let m = model(n)?;
            let w = mult_unitary(&m).map_err(|e| e.to_string())?;
            pentagon_residual(&w, &pentagon_probes(&m, cfg.pentagon.probes)).map(|d| d.max).map_err(|e| e.to_string())
        }),
        Scenario::DeltaA => sweep(&mut r, "delta_a_is", ns, Some(tol.delta), Some(tol.factor), |n| {
            let m = model(n)?;
            let w = mult_unitary(&m).map_err(|e| e.to_string())?;
            let ai = m.a_it(m.shift_time(2));
            let lhs = comultiply(&ai, &w).map_err(|e| e.to_string())?;
            let rhs = tensor_square(&m, &ai).map_err(|e| e.to_string())?;
            Ok::<_, String>(relative_defect(&lhs, &rhs, &w.probes(probes)).max)
        }),
        Scenario::DeltaB => {
            let mut literal = vec![];
            let mut beta = vec![];
            sweep(&mut r, "delta_b", ns, Some(tol.delta), Some(tol.factor), |n| {
                let m = model(n)?;
                let w = mult_unitary(&m).map_err(|e| e.to_string())?;
                let pr = w.probes(probes);
                let ext = w.px.extension();
                let db = relative_defect(&comultiply(&m.b(), &w).map_err(|e| e.to_string())?, &ext.d_ext, &pr).max;
                let dbeta = relative_defect(&comultiply(&m.beta(), &w).map_err(|e| e.to_string())?, &ext.delta_ext, &pr).max;
                beta.push((n, dbeta));
                // diagnostic: the closure against the literal sum a⊗b + b⊗I on its sector
                let (sl, rl, _, _) = w.px.legs();
                let sum = LinOp::from_fns(
                    w.dim(),
                    move |v| sl.apply(v).iter().zip(rl.apply(v)).map(|(x, y)| x + y).collect(),
                    |v| v.to_vec(),
                );
                let sector: Vec<Vec<C64>> = pr.iter().map(|v| w.px.literal_sector(v)).collect();
                literal.push((n, relative_defect(&ext.d_ext, &sum, &sector).max));
                Ok::<_, String>(db)
            });
            let done: Vec<usize> = beta.iter().map(|r| r.0).collect();
            let mut it = beta.into_iter();
            sweep(&mut r, "delta_beta", &done, Some(tol.delta), Some(tol.factor), |_| it.next().map(|r| r.1).ok_or("missing"));
            r.table("delta_b_literal_sector", literal);
        }
        Scenario::Roundtrip => roundtrip(cfg, &mut r, ns)?,
    }
    Ok(r)
}

fn recovery(p: &RepParams, v: &UnitaryRep, opts: &ExtractOptions) -> Result<(f64, f64), RepError> {
    let e = extract_params(v, p.def, opts)?;
    let spectra = spectrum_error(&e.params.c, &p.c, 1e-3).max(spectrum_error(&e.params.d, &p.d, 1e-3));
    let pairing = (&e.params.delta - &p.delta).norm().max(e.report.params.pair.worst());
    Ok((spectra, pairing))
}

fn options(cfg: &ScenarioConfig) -> ExtractOptions {
    ExtractOptions { seed: cfg.run.seed, ..ExtractOptions::default() }
}

fn negative_control(cfg: &ScenarioConfig, r: &mut Report, m: &Arc<StandardModel>) -> Result<(), CliError> {
    if m.dim() > DENSE_LIMIT {
        return Err(CliError::Infeasible(format!("random-unitary control needs dim {} <= {DENSE_LIMIT}", m.dim())));
    }
    let opts = options(cfg);
    // passes when extraction refuses; the residual is the group-law violation
    r.check_with("random_unitary_rejected", opts.group_law_tol, |v| v > opts.group_law_tol, || {
        let u = UnitaryRep::external(random_unitary(m.dim(), cfg.run.seed).map_err(|e| e.to_string())?, m.clone())
            .map_err(|e| e.to_string())?;
        match extract_params(&u, m.def, &opts) {
            Err(RepError::GroupLaw { residual, .. }) => Ok(residual),
            Err(e) => Err(e.to_string()),
            Ok(_) => Ok(0.0),
        }
    });
    Ok(())
}

fn roundtrip(cfg: &ScenarioConfig, r: &mut Report, ns: &[usize]) -> Result<(), CliError> {
    let def = cfg.deformation()?;
    let tol = &cfg.tolerances;
    let opts = options(cfg);
    for (name, p) in reference_params(def) {
        let mut pairing = Err("not run".to_string());
        // recovered spectra need not improve with N, so only the final value is judged
        sweep(r, name, ns, Some(tol.spectrum), None, |n| {
            let m = cfg.model(n).map_err(|e| e.to_string())?;
            let g = gtriple_standard(&m.lat, def).map_err(|e| e.to_string())?;
            let v = build_rep(&p, &g).map_err(|e| e.to_string())?;
            let (spectra, pair) = recovery(&p, &v, &opts).map_err(|e| e.to_string())?;
            pairing = Ok(pair);
            Ok::<_, String>(spectra)
        });
        r.push(&format!("{name}_pairing"), pairing, tol.pairing, |v| v <= tol.pairing, 0);
    }
    let m = cfg.model(*ns.last().expect("validated"))?;
    negative_control(cfg, r, &m)
}

fn rep_params(cfg: &ScenarioConfig) -> Result<RepParams, CliError> {
    params_from_taus(cfg.deformation()?, &cfg.rep.log_c, &cfg.rep.taus).map_err(|e| CliError::Config(format!("rep: {e}")))
}

pub fn rep(cfg: &ScenarioConfig, action: RepAction) -> Result<Report, CliError> {
    let p = rep_params(cfg)?;
    let k = p.c.nrows();
    let tol = &cfg.tolerances;
    let last = *cfg.lattice.n.last().expect("validated");
    let name = match action {
        RepAction::Build => "rep_build",
        RepAction::Verify => "rep_verify",
        RepAction::Extract => "rep_extract",
    };
    let mut r = Report::new(name, cfg);
    let build = |n: usize| -> Result<UnitaryRep, String> {
        let m = cfg.model(n).map_err(|e| e.to_string())?;
        let g = gtriple_standard(&m.lat, p.def).map_err(|e| e.to_string())?;
        build_rep(&p, &g).map_err(|e| e.to_string())
    };
    match action {
        RepAction::Build => {
            guard(cfg, "rep build", 2 * k * last)?;
            let pr = validate_params(&p);
            r.check_with("c_positive", 0.0, |v| v > 0.0, || Ok::<_, String>(pr.c_min_eigenvalue));
            r.check("c_selfadjoint", tol.exact, || Ok::<_, String>(pr.c_asymmetry));
            r.check("c_commutes_with_delta", tol.exact, || Ok::<_, String>(pr.c_delta));
            r.check("mpair_invariants", tol.exact, || Ok::<_, String>(pr.pair.worst()));
            r.check("unitarity", tol.unitarity, || {
                let v = build(last)?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
                let pr: Vec<Vec<C64>> = (0..cfg.packets.probes).map(|_| random_unit(v.dim(), &mut rng)).collect();
                Ok::<_, String>(v.unitarity(&pr))
            });
        }
        RepAction::Verify => {
            for &n in &cfg.lattice.n {
                guard(cfg, &format!("rep verify at N = {n}"), k * 4 * n * n)?;
            }
            sweep(&mut r, "rep_residual", &cfg.lattice.n, Some(tol.rep_residual), Some(tol.factor), |n| {
                let v = build(n)?;
                let w = mult_unitary(&v.model).map_err(|e| e.to_string())?;
                let probes = rep_probes(&v.model, k, cfg.packets.probes, cfg.run.seed);
                rep_residual(&v, &w, &probes).map(|d| d.max).map_err(|e| e.to_string())
            });
        }
        RepAction::Extract => {
            guard(cfg, "rep extract", 2 * k * last)?;
            let mut pairing = Err("not run".to_string());
            r.check("spectrum", tol.spectrum, || {
                let v = build(last)?;
                let (s, pa) = recovery(&p, &v, &options(cfg)).map_err(|e| e.to_string())?;
                pairing = Ok(pa);
                Ok::<_, String>(s)
            });
            r.push("pairing", pairing, tol.pairing, |v| v <= tol.pairing, 0);
            if cfg.rep.negative_control {
                negative_control(cfg, &mut r, &cfg.model(last)?)?;
            }
        }
    }
    Ok(r)
}

/// F(r, ρ) on the positive (ρ = 0, r > 0) or negative (ρ = ±1, r < 0) branch.
pub fn qexp_eval(cfg: &ScenarioConfig, x: f64, rho: i8) -> Result<(C64, Report), CliError> {
    let q = Qexp::new(cfg.deformation()?);
    let v = q.f(x, rho).map_err(|e| CliError::Config(format!("qexp: {e}")))?;
    let mut r = Report::new("qexp_eval", cfg);
    r.check("unimodular", cfg.tolerances.negative_branch, || Ok::<_, String>((v.norm() - 1.0).abs()));
    Ok((v, r))
}
