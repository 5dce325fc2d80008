//! Residual-vs-N tables and the decrease verdict used by the convergence checks.

/// Residuals this small count as converged regardless of the trend.
pub const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    /// (N, residual) in ascending N.
    pub rows: Vec<(usize, f64)>,
}

impl Trend {
    pub fn new(rows: Vec<(usize, f64)>) -> Self {
        Trend { rows }
    }

    pub fn last(&self) -> Option<f64> {
        self.rows.last().map(|r| r.1)
    }

    /// Each step must shrink by `factor`, unless both values sit at the floor.
    pub fn decreasing(&self, factor: f64) -> bool {
        !self.rows.is_empty()
            && self.rows.iter().all(|r| r.1.is_finite())
            && self.rows.windows(2).all(|w| {
                let (a, b) = (w[0].1, w[1].1);
                (a <= FLOOR && b <= FLOOR) || b * factor <= a
            })
    }

    /// Largest step ratio r(2N)/r(N); floor-level steps count as 0. NaN if fewer than two rows.
    pub fn worst_ratio(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| if w[0].1 <= FLOOR && w[1].1 <= FLOOR { 0.0 } else { w[1].1 / w[0].1 })
            .fold(f64::NAN, f64::max)
    }

    /// Decreasing and the finest residual within `tol`.
    pub fn verdict(&self, factor: f64, tol: f64) -> bool {
        self.decreasing(factor) && self.last().is_some_and(|r| r <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(Trend::new(vec![(128, 1e-2), (256, 5e-3)]).verdict(1.5, 1e-2));
        assert!(!Trend::new(vec![(128, 1e-2), (256, 8e-3)]).decreasing(1.5));
        assert!(Trend::new(vec![(128, 1e-15), (256, 2e-15)]).decreasing(1.5));
        assert!(!Trend::new(vec![(128, f64::NAN)]).decreasing(1.5));
        assert!(!Trend::new(vec![]).decreasing(1.5));
        assert!(Trend::new(vec![(64, 3.0), (128, 2.0)]).decreasing(1.0));
        assert_eq!(Trend::new(vec![(64, 4.0), (128, 2.0), (256, 1.5)]).worst_ratio(), 0.75);
        assert!(Trend::new(vec![(64, 4.0)]).worst_ratio().is_nan());
    }
}
