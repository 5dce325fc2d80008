use nalgebra::DMatrix;

use super::op::{diff_norm, norm, LinOp};
use super::LinalgError;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectStats {
    pub max: f64,
    pub mean: f64,
    /// ‖A − B‖ when both operators are dense.
    pub op_norm: Option<f64>,
}

pub fn defect(a: &LinOp, b: &LinOp, vectors: &[Vec<C64>]) -> Result<DefectStats, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::Dimension { expected: a.dim(), got: b.dim() });
    }
    let mut max = 0f64;
    let mut sum = 0f64;
    for v in vectors {
        if v.len() != a.dim() {
            return Err(LinalgError::Dimension { expected: a.dim(), got: v.len() });
        }
        let r = diff_norm(&a.apply(v), &b.apply(v));
        max = max.max(r);
        sum += r;
    }
    let op_norm = match (a, b) {
        (LinOp::Dense(x), LinOp::Dense(y)) => Some(spectral_norm(&(x - y))),
        _ => None,
    };
    Ok(DefectStats { max, mean: if vectors.is_empty() { 0.0 } else { sum / vectors.len() as f64 }, op_norm })
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// ‖(A − B)v‖ / ‖Bv‖ over the probes.
pub fn relative_defect(a: &LinOp, b: &LinOp, probes: &[Vec<C64>]) -> DefectStats {
    let mut s = DefectStats { max: 0.0, mean: 0.0, op_norm: None };
    for v in probes {
        let bv = b.apply(v);
        let r = diff_norm(&a.apply(v), &bv) / norm(&bv).max(f64::MIN_POSITIVE);
        s.max = s.max.max(r);
        s.mean += r;
    }
    s.mean /= probes.len().max(1) as f64;
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let i = LinOp::Dense(DMatrix::identity(3, 3));
        let z = LinOp::Dense(DMatrix::zeros(3, 3));
        let e: Vec<Vec<C64>> = (0..3)
            .map(|k| (0..3).map(|j| C64::new((j == k) as u8 as f64, 0.0)).collect())
            .collect();
        let s = defect(&i, &i, &e).unwrap();
        assert_eq!(s.max, 0.0);
        let s = defect(&i, &z, &e).unwrap();
        assert_eq!((s.max, s.mean), (1.0, 1.0));
        assert!((s.op_norm.unwrap() - 1.0).abs() < 1e-14);
        assert!(defect(&i, &LinOp::identity(2), &e).is_err());
    }
}
