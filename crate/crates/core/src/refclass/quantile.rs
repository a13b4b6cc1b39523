//! Empirical distribution primitives over a sorted sample.

use serde::{Deserialize, Serialize};

/// Relative slack when comparing `n * level` against an integer rank, so
/// that levels like `1 - 0.2` land on the intended rank despite rounding.
const RANK_SLACK: f64 = 1e-12;

/// One-based nearest-rank index for `level` in `(0, 1]` over `n` values:
/// the smallest `k` with `k >= n * level`.
pub fn nearest_rank(n: usize, level: f64) -> usize {
    assert!(n > 0, "nearest_rank over an empty sample");
    let target = n as f64 * level;
    let k = (target - RANK_SLACK * n as f64).ceil();
    (k.max(1.0) as usize).min(n)
}

/// Smallest sample value whose ECDF reaches `level`. `sorted` must be
/// ascending and non-empty.
pub fn nearest_rank_quantile(sorted: &[f64], level: f64) -> f64 {
    sorted[nearest_rank(sorted.len(), level) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub deviation: f64,
    pub cumulative: f64,
}

/// Right-continuous ECDF knots: one point per distinct value.
pub fn ecdf_points(sorted: &[f64]) -> Vec<EcdfPoint> {
    let n = sorted.len() as f64;
    let mut points: Vec<EcdfPoint> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let cumulative = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.deviation == x => last.cumulative = cumulative,
            _ => points.push(EcdfPoint {
                deviation: x,
                cumulative,
            }),
        }
    }
    if let Some(last) = points.last_mut() {
        last.cumulative = 1.0;
    }
    points
}

/// Fraction of the sample at or below `x`.
pub fn ecdf_at(sorted: &[f64], x: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let count = sorted.partition_point(|&v| v <= x);
    count as f64 / sorted.len() as f64
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_lands_on_integer_levels() {
        assert_eq!(nearest_rank(10, 1.0 - 0.2), 8);
        assert_eq!(nearest_rank(46, 1.0 - 0.2), 37);
        assert_eq!(nearest_rank(46, 0.5), 23);
        assert_eq!(nearest_rank(40, 1.0 - 0.2), 32);
        assert_eq!(nearest_rank(1, 0.01), 1);
        assert_eq!(nearest_rank(5, 1e-9), 1);
        assert_eq!(nearest_rank(5, 1.0), 5);
    }

    #[test]
    fn ecdf_collapses_ties() {
        let s = [1.0, 1.0, 2.0, 3.0];
        let pts = ecdf_points(&s);
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].cumulative, 0.5);
        assert_eq!(pts[2].cumulative, 1.0);
        assert_eq!(ecdf_at(&s, 0.5), 0.0);
        assert_eq!(ecdf_at(&s, 1.0), 0.5);
        assert_eq!(ecdf_at(&s, 3.0), 1.0);
    }
}
