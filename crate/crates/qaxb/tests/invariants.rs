use nalgebra::DMatrix;
use proptest::prelude::*;
use qaxb::deformation::{Deformation, Qexp};
use qaxb::linalg::op::kron;
use qaxb::linalg::{inverse_z, leg_embed, z_transform, LatticeLine, LinOp};
use qaxb::pairs::mpair_from_taus;
use qaxb::C64;

fn hermitian(n: usize, vals: &[f64]) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |i, j| C64::new(vals[(i * n + j) % vals.len()], vals[(j * n + i + 1) % vals.len()]));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mpair_from_taus_is_exact(taus in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..50.0], 1..6)) {
        let p = mpair_from_taus(&taus).unwrap();
        prop_assert_eq!(p.defects.worst(), 0.0);
        prop_assert_eq!(p.dim(), 2 * taus.len());
    }

    #[test]
    fn z_round_trip(vals in prop::collection::vec(-3.0f64..3.0, 64)) {
        let t = hermitian(8, &vals);
        let z = z_transform(&LinOp::Dense(t.clone())).unwrap();
        let back = inverse_z(&z).unwrap().to_dense().unwrap();
        prop_assert!((back - &t).norm() <= 1e-10 * t.norm().max(1.0));
    }

    #[test]
    fn qexp_is_unimodular(lr in -3.0f64..3.0, neg in any::<bool>(), rho in prop_oneof![Just(1i8), Just(-1i8)], k in 0i64..3) {
        let q = Qexp::new(Deformation::new(k).unwrap());
        let r = 10f64.powf(lr);
        let v = if neg { q.f(-r, rho).unwrap() } else { q.f(r, 0).unwrap() };
        prop_assert!((v.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn centred_dft_preserves_norm(seed in 0u64..1000) {
        let l = LatticeLine::balanced(64, 1.0).unwrap();
        let mut v: Vec<C64> = (0..64).map(|j| C64::new(((j as u64 * 31 + seed) % 17) as f64, ((j as u64 + seed) % 5) as f64)).collect();
        let n0: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        l.to_momentum(&mut v);
        let n1: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((n0 - n1).abs() < 1e-10 * n0);
    }

    #[test]
    fn leg_embedding_matches_kronecker(a in prop::collection::vec(-1.0f64..1.0, 9), b in prop::collection::vec(-1.0f64..1.0, 4)) {
        let am = DMatrix::from_fn(3, 3, |i, j| C64::new(a[i * 3 + j], 0.0));
        let bm = DMatrix::from_fn(2, 2, |i, j| C64::new(0.0, b[i * 2 + j]));
        let op = leg_embed(&LinOp::Dense(bm.clone()), &[2], &[3, 2]).unwrap().into_linop();
        let want = kron(&DMatrix::identity(3, 3), &bm);
        prop_assert!((op.to_dense().unwrap() - want).norm() < 1e-14);
        let op1 = leg_embed(&LinOp::Dense(am.clone()), &[1], &[3, 2]).unwrap().into_linop();
        prop_assert!((op1.to_dense().unwrap() - kron(&am, &DMatrix::identity(2, 2))).norm() < 1e-14);
    }
}
