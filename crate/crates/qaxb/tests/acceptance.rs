//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qaxb::convergence::Trend;
use qaxb::deformation::{theta_fn, theta_fn_shifted, Deformation, Qexp, QuadConfig};
use qaxb::group::{b0_apply, comultiply, pentagon_probes, pentagon_residual, theta_dual, B0Function, MultUnitary};
use qaxb::linalg::op::inner;
use qaxb::linalg::{inverse_z, leg_embed, relative_defect, z_transform, LinOp};
use qaxb::pairs::lemma::LemmaCheck;
use qaxb::pairs::{gtriple_standard, mpair_from_taus, MPair, PairQexp, StandardModel, ZakrzewskiModel};
use qaxb::reps::{build_rep, extract_params, random_unitary, reference_params, spectrum_error, ExtractOptions, UnitaryRep};
use qaxb::C64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let el = t.elapsed();
    let pass = o.pass && el <= limit;
    println!(
        "[{}] {id}. {name}: {} ({:.1}s, limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        el.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn model(n: usize, k: i64) -> Arc<StandardModel> {
    Arc::new(StandardModel::balanced(n, Deformation::new(k).unwrap()).unwrap())
}

fn special_functions() -> Outcome {
    let cfg = QuadConfig::default();
    let mut modulus = 0f64;
    for k in [0, 1] {
        let d = Deformation::new(k).unwrap();
        for i in 0..65 {
            let x = -8.0 + 0.25 * i as f64;
            modulus = modulus.max((theta_fn(&d, x, &cfg).unwrap().norm() - 1.0).abs());
        }
    }
    let mut oracle = 0f64;
    for (name, shifted) in [("vtheta_real.csv", false), ("vtheta_shifted.csv", true)] {
        for (theta, x, want) in common::table(name) {
            let d = Deformation::new(common::k_of(theta)).unwrap();
            let got = if shifted { theta_fn_shifted(&d, x, &cfg) } else { theta_fn(&d, x, &cfg) }.unwrap();
            oracle = oracle.max((got - want).norm() / want.norm());
        }
    }
    Outcome {
        pass: modulus <= 1e-9 && oracle <= 1e-8,
        detail: format!("max ||V|-1| = {modulus:.2e} (tol 1e-9), max rel. oracle error = {oracle:.2e} (tol 1e-8)"),
    }
}

fn negative_branch() -> Outcome {
    let q = Qexp::new(Deformation::new(0).unwrap());
    let mut worst = 0f64;
    for i in 0..25 {
        let r = -(10f64.powf(-3.0 + 6.0 * i as f64 / 24.0));
        for rho in [1, -1] {
            worst = worst.max((q.f(r, rho).unwrap().norm() - 1.0).abs());
        }
    }
    Outcome { pass: worst <= 1e-8, detail: format!("max ||F|-1| = {worst:.2e} over 50 points (tol 1e-8)") }
}

fn exact_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut pair, mut round) = (0f64, 0f64);
    for _ in 0..100 {
        let len = rng.gen_range(1..5);
        let taus: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..20.0) }).collect();
        pair = pair.max(mpair_from_taus(&taus).unwrap().defects.worst());
        let n = rng.gen_range(2..9);
        let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
        let t = (&m + m.adjoint()) * c(0.5);
        let back = inverse_z(&z_transform(&LinOp::Dense(t.clone())).unwrap()).unwrap().to_dense().unwrap();
        round = round.max((back - &t).norm() / t.norm().max(1.0));
    }
    Outcome {
        pass: pair <= 1e-10 && round <= 1e-10,
        detail: format!("M-pair defect {pair:.2e}, z round trip {round:.2e} on 100 instances (tol 1e-10)"),
    }
}

fn zakrzewski() -> Outcome {
    let rows = [128, 256]
        .iter()
        .map(|&n| {
            let m = model(n, 0);
            let z = ZakrzewskiModel::new(m.clone());
            (n, z.defect(&m.interior_probes(6), &z.shifts).max)
        })
        .collect();
    let t = Trend::new(rows);
    Outcome { pass: t.verdict(1.5, 1e-2), detail: format!("{:?} (tol 1e-2, factor 1.5)", t.rows) }
}

fn lemma() -> Outcome {
    let rows = [128, 256]
        .iter()
        .map(|&n| {
            let m = model(n, 0);
            let px = Arc::new(PairQexp::new(m.clone(), &Qexp::new(m.def)).unwrap());
            let l = LemmaCheck::new(px, 1.0).unwrap();
            (n, l.residual(&l.probes(4)).max)
        })
        .collect();
    let t = Trend::new(rows);
    Outcome { pass: t.verdict(1.5, 5e-3), detail: format!("{:?} (tol 5e-3, factor 1.5)", t.rows) }
}

fn comultiplication() -> Outcome {
    let (mut da, mut db, mut dbeta, mut lit) = (vec![], vec![], vec![], vec![]);
    for n in [128, 256] {
        let m = model(n, 0);
        let w = MultUnitary::new(m.clone(), &Qexp::new(m.def)).unwrap();
        let probes = w.probes(4);
        let d = m.dim();
        let ai = m.a_it(m.shift_time(2));
        let aa = LinOp::product(&[
            leg_embed(&ai, &[1], &[d, d]).unwrap().into_linop(),
            leg_embed(&ai, &[2], &[d, d]).unwrap().into_linop(),
        ])
        .unwrap();
        da.push((n, relative_defect(&comultiply(&ai, &w).unwrap(), &aa, &probes).max));
        let ext = w.px.extension();
        db.push((n, relative_defect(&comultiply(&m.b(), &w).unwrap(), &ext.d_ext, &probes).max));
        dbeta.push((n, relative_defect(&comultiply(&m.beta(), &w).unwrap(), &ext.delta_ext, &probes).max));
        let (s, r, _, _) = w.px.legs();
        let sum = LinOp::from_fns(w.dim(), move |v| s.apply(v).iter().zip(r.apply(v)).map(|(x, y)| x + y).collect(), |v| v.to_vec());
        let sector: Vec<Vec<C64>> = probes.iter().map(|v| w.px.literal_sector(v)).collect();
        lit.push((n, relative_defect(&ext.d_ext, &sum, &sector).max));
    }
    let (ta, tb, tbeta) = (Trend::new(da), Trend::new(db), Trend::new(dbeta));
    let pass = ta.verdict(1.5, 1e-2) && tb.verdict(1.5, 1e-2) && tbeta.verdict(1.5, 1e-2);
    Outcome {
        pass,
        detail: format!(
            "D(a^is) vs a^is(x)a^is {:?}; D(b) vs [a(x)b+b(x)I] {:?}; D(beta) {:?} (tol 1e-2); literal-sum diagnostic {:?}",
            ta.rows, tb.rows, tbeta.rows, lit
        ),
    }
}

fn pentagon() -> Outcome {
    let rows = [16, 32]
        .iter()
        .map(|&n| {
            let m = model(n, 0);
            let w = MultUnitary::new(m.clone(), &Qexp::new(m.def)).unwrap();
            (2 * n, pentagon_residual(&w, &pentagon_probes(&m, 8)).unwrap().max)
        })
        .collect();
    let t = Trend::new(rows);
    Outcome { pass: t.decreasing(1.0), detail: format!("per-leg dimension vs residual {:?}", t.rows) }
}

fn round_trip() -> Outcome {
    let def = Deformation::new(0).unwrap();
    let m = model(256, 0);
    let g = gtriple_standard(&m.lat, def).unwrap();
    let opts = ExtractOptions::default();
    let mut pass = true;
    let mut worst = (0f64, 0f64, 0f64);
    for (name, p) in reference_params(def) {
        let v = build_rep(&p, &g).unwrap();
        match extract_params(&v, def, &opts) {
            Ok(e) => {
                let ec = spectrum_error(&e.params.c, &p.c, 1e-3);
                let ed = spectrum_error(&e.params.d, &p.d, 1e-3);
                let eb = (&e.params.delta - &p.delta).norm().max(e.report.params.pair.worst());
                worst = (worst.0.max(ec), worst.1.max(ed), worst.2.max(eb));
                pass &= ec <= 1e-2 && ed <= 1e-2 && eb <= 1e-8;
            }
            Err(err) => {
                println!("    {name}: extraction failed: {err}");
                pass = false;
            }
        }
    }
    let rnd = UnitaryRep::external(random_unitary(m.dim(), 5).unwrap(), m.clone()).unwrap();
    let rejected = extract_params(&rnd, def, &opts).err();
    pass &= rejected.is_some();
    Outcome {
        pass,
        detail: format!(
            "6 parameter sets: spectrum error c {:.2e}, d {:.2e} (tol 1e-2), delta {:.2e} (tol 1e-8); random unitary: {}",
            worst.0,
            worst.1,
            worst.2,
            rejected.map(|e| format!("rejected ({e})")).unwrap_or_else(|| "ACCEPTED".into())
        ),
    }
}

fn dual_action() -> Outcome {
    let m = model(256, 0);
    let h = m.def.hbar;
    let w = MultUnitary::new(m.clone(), &Qexp::new(m.def)).unwrap();
    let probes = m.interior_probes(4);
    let (mut phase, mut op) = (0f64, 0f64);
    for (t, s) in [(4.0 * m.lat.dp() / h, 0.5), (-3.0 * m.lat.dp() / h, 1.3)] {
        let ai = m.a_it(s);
        let th = theta_dual(&ai, t, &w).unwrap();
        for v in &probes {
            let (x, y) = (ai.apply(v), th.apply(v));
            let z = inner(&x, &y);
            phase = phase.max((z / C64::from_polar(1.0, h * t * s)).arg().abs());
            // remove the packet damping |z| before comparing operators
            let r: f64 = y.iter().zip(&x).map(|(a, b)| (a / z.norm() - b * C64::from_polar(1.0, h * t * s)).norm_sqr()).sum();
            op = op.max(r.sqrt());
        }
    }
    let g = B0Function::new(
        Arc::new(|x: f64| c((-x * x).exp())),
        Arc::new(|x: f64| c(x / (1.0 + x * x))),
    )
    .unwrap();
    let gb = b0_apply(&g, &MPair::measured(m.b(), m.beta(), Default::default())).unwrap();
    let fix = relative_defect(&theta_dual(&gb, 4.0 * m.lat.dp() / h, &w).unwrap(), &gb, &probes).max;
    Outcome {
        pass: phase <= 1e-3 && fix <= 1e-3,
        detail: format!("phase error {phase:.2e} (tol 1e-3), corrected operator residual {op:.2e}, theta_t(g) vs g {fix:.2e} (tol 1e-3)"),
    }
}

fn main() {
    let t = Instant::now();
    let s = Duration::from_secs;
    let results = [
        run(1, "special functions", s(30), special_functions),
        run(2, "negative branch", s(30), negative_branch),
        run(3, "exact algebra", s(10), exact_algebra),
        run(4, "Zakrzewski model", s(60), zakrzewski),
        run(5, "exponential equation", s(120), lemma),
        run(6, "comultiplication", s(180), comultiplication),
        run(7, "pentagon", s(180), pentagon),
        run(8, "representation round trip", s(300), round_trip),
        run(9, "dual action", s(60), dual_action),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} passed in {:.1}s", results.len(), t.elapsed().as_secs_f64());
    if passed != results.len() {
        std::process::exit(1);
    }
}
