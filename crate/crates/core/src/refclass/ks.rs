//! Two-sample Kolmogorov-Smirnov test.
//!
//! The statistic is computed exactly on the merged sample. P-values are
//! exact (lattice-path enumeration, integer arithmetic) when both samples
//! have at most [`EXACT_MAX_SIZE`] points and use the asymptotic Kolmogorov
//! distribution otherwise.

use serde::{Deserialize, Serialize};

pub const EXACT_MAX_SIZE: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub method: PValueMethod,
}

/// Runs the test on two non-empty samples. Symmetric in its arguments.
pub fn two_sample(xs: &[f64], ys: &[f64]) -> KsOutcome {
    assert!(
        !xs.is_empty() && !ys.is_empty(),
        "KS test needs non-empty samples"
    );
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (m, n) = (a.len(), b.len());
    let scaled = scaled_statistic(&a, &b);
    let statistic = scaled as f64 / (m as u64 * n as u64) as f64;
    if m <= EXACT_MAX_SIZE && n <= EXACT_MAX_SIZE {
        KsOutcome {
            statistic,
            p_value: exact_p_value(m, n, scaled),
            method: PValueMethod::Exact,
        }
    } else {
        KsOutcome {
            statistic,
            p_value: asymptotic_p_value(m, n, statistic),
            method: PValueMethod::Asymptotic,
        }
    }
}

/// `D * m * n` as an integer: the largest `|i*n - j*m|` over the merged
/// order, where `i`, `j` count the values of each sample at or below the
/// current point.
fn scaled_statistic(a: &[f64], b: &[f64]) -> u64 {
    let (m, n) = (a.len() as i64, b.len() as i64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0i64;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= next {
            i += 1;
        }
        while j < b.len() && b[j] <= next {
            j += 1;
        }
        best = best.max((i as i64 * n - j as i64 * m).abs());
    }
    best as u64
}

/// `P(D >= d)` under the null, by counting monotone lattice paths from
/// `(0,0)` to `(m,n)` that stay strictly inside `|i*n - j*m| < scaled`.
fn exact_p_value(m: usize, n: usize, scaled: u64) -> f64 {
    if scaled == 0 {
        return 1.0;
    }
    let limit = scaled as i64;
    let inside = |i: usize, j: usize| (i as i64 * n as i64 - j as i64 * m as i64).abs() < limit;
    // Row-by-row path counts; C(70, 35) < 2^67 so u128 is exact.
    let mut row = vec![0u128; n + 1];
    for i in 0..=m {
        for j in 0..=n {
            row[j] = if !inside(i, j) {
                0
            } else if i == 0 && j == 0 {
                1
            } else {
                let up = if i > 0 { row[j] } else { 0 };
                let left = if j > 0 { row[j - 1] } else { 0 };
                up + left
            };
        }
    }
    let total = binomial(m + n, m);
    let outside = total - row[n];
    (outside as f64 / total as f64).clamp(0.0, 1.0)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Kolmogorov survival function with the small-sample correction to the
/// argument for effective size `m*n/(m+n)`.
fn asymptotic_p_value(m: usize, n: usize, statistic: f64) -> f64 {
    let ne = (m * n) as f64 / (m + n) as f64;
    let root = ne.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * statistic;
    kolmogorov_survival(lambda)
}

fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 2.0;
    let mut previous_term = 0.0f64;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (a2 * kf * kf).exp();
        sum += term;
        if term.abs() <= 1e-3 * previous_term.abs() || term.abs() <= 1e-12 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        previous_term = term;
    }
    // Series fails to converge only for tiny lambda, where the survival is 1.
    1.0
}
