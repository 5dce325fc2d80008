mod common;

use qaxb::deformation::{theta_fn, theta_fn_shifted, Deformation, QuadConfig};
use qaxb::oracle::RayOracle;

#[test]
fn frozen_tables_cover_both_thetas() {
    for name in ["vtheta_real.csv", "vtheta_shifted.csv"] {
        let t = common::table(name);
        assert_eq!(t.len(), 200);
        assert_eq!(t.iter().filter(|r| r.0 == 6.0).count(), 100);
        assert_eq!(t.iter().filter(|r| r.0 == 10.0).count(), 100);
    }
}

#[test]
fn evaluator_matches_real_table() {
    let cfg = QuadConfig::default();
    for (theta, x, want) in common::table("vtheta_real.csv") {
        let d = Deformation::new(common::k_of(theta)).unwrap();
        let got = theta_fn(&d, x, &cfg).unwrap();
        assert!((got - want).norm() / want.norm() < 1e-8, "theta={theta} x={x}: {got} vs {want}");
    }
}

#[test]
fn evaluator_matches_shifted_table() {
    let cfg = QuadConfig::default();
    for (theta, x, want) in common::table("vtheta_shifted.csv") {
        let d = Deformation::new(common::k_of(theta)).unwrap();
        let got = theta_fn_shifted(&d, x, &cfg).unwrap();
        assert!((got - want).norm() / want.norm() < 1e-8, "theta={theta} x={x}: {got} vs {want}");
    }
}

#[test]
fn ray_oracle_matches_tables() {
    for (name, shifted) in [("vtheta_real.csv", false), ("vtheta_shifted.csv", true)] {
        for (theta, x, want) in common::table(name).into_iter().step_by(7) {
            let o = RayOracle::new(theta);
            let got = if shifted { o.v_shifted(x) } else { o.v(x) };
            assert!((got - want).norm() < 1e-11, "{name} theta={theta} x={x}");
        }
    }
}
