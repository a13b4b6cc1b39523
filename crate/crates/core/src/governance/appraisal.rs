//! Ex-post appraisal: net present value and internal rate of return.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower and upper end of the IRR search bracket.
pub const IRR_BRACKET: (f64, f64) = (-0.99, 10.0);
/// Residual bound on NPV divided by the total absolute cashflow.
pub const IRR_TOLERANCE: f64 = 1e-9;
const SCAN_POINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cashflow {
    pub period: u32,
    pub amount: f64,
}

impl Cashflow {
    pub fn new(period: u32, amount: f64) -> Self {
        Cashflow { period, amount }
    }

    /// `[a0, a1, ...]` at periods 0, 1, ...
    pub fn series(amounts: &[f64]) -> Vec<Cashflow> {
        amounts
            .iter()
            .enumerate()
            .map(|(t, &a)| Cashflow::new(t as u32, a))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AppraisalError {
    #[error("discount rate {0} must exceed -1")]
    InvalidRate(f64),
    #[error("cashflow amounts must be finite")]
    NonFinite,
    #[error("cashflows never change sign, so no IRR exists")]
    NoSignChange,
    #[error("no IRR in the search bracket ({lo}, {hi})")]
    NoRootInBracket { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrrResult {
    pub rate: f64,
    /// Every root found in the bracket, ascending.
    pub roots: Vec<f64>,
    pub multiple_roots: bool,
    /// `|npv(rate)| / sum |cf|`.
    pub residual: f64,
}

fn check_finite(cashflows: &[Cashflow]) -> Result<(), AppraisalError> {
    if cashflows.iter().all(|c| c.amount.is_finite()) {
        Ok(())
    } else {
        Err(AppraisalError::NonFinite)
    }
}

/// `sum cf_t / (1 + rate)^t`, summed in input order.
pub fn npv(cashflows: &[Cashflow], rate: f64) -> Result<f64, AppraisalError> {
    if !rate.is_finite() || rate <= -1.0 {
        return Err(AppraisalError::InvalidRate(rate));
    }
    check_finite(cashflows)?;
    Ok(npv_unchecked(cashflows, rate))
}

fn npv_unchecked(cashflows: &[Cashflow], rate: f64) -> f64 {
    let base = 1.0 + rate;
    cashflows
        .iter()
        .map(|c| {
            if c.period == 0 {
                c.amount
            } else {
                c.amount / base.powi(c.period as i32)
            }
        })
        .sum()
}

/// Bisection on every sign change found by scanning the bracket; returns the
/// root nearest zero and flags when there is more than one.
pub fn irr(cashflows: &[Cashflow]) -> Result<IrrResult, AppraisalError> {
    check_finite(cashflows)?;
    let has_pos = cashflows.iter().any(|c| c.amount > 0.0);
    let has_neg = cashflows.iter().any(|c| c.amount < 0.0);
    if !(has_pos && has_neg) {
        return Err(AppraisalError::NoSignChange);
    }
    let scale: f64 = cashflows.iter().map(|c| c.amount.abs()).sum();
    let f = |r: f64| npv_unchecked(cashflows, r) / scale;

    let (lo, hi) = IRR_BRACKET;
    let grid = scan_grid(lo, hi);
    let values: Vec<f64> = grid.iter().map(|&r| f(r)).collect();
    let mut roots = Vec::new();
    for k in 0..grid.len() {
        if values[k] == 0.0 {
            roots.push(grid[k]);
        } else if k + 1 < grid.len()
            && values[k + 1] != 0.0
            && values[k].signum() != values[k + 1].signum()
        {
            roots.push(bisect(&f, grid[k], grid[k + 1], values[k]));
        }
    }
    let rate = roots
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(AppraisalError::NoRootInBracket { lo, hi })?;
    let residual = f(rate).abs();
    Ok(IrrResult {
        rate,
        multiple_roots: roots.len() > 1,
        roots,
        residual,
    })
}

/// Uniform in `log(1 + r)`, which spaces points densely near -1 where the
/// NPV of a long cashflow changes fastest, and includes r = 0 exactly.
fn scan_grid(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = ((1.0 + lo).ln(), (1.0 + hi).ln());
    let zero_at = ((0.0 - a) / (b - a) * SCAN_POINTS as f64).round() as usize;
    (0..=SCAN_POINTS)
        .map(|i| {
            if i == zero_at {
                0.0
            } else {
                (a + (b - a) * i as f64 / SCAN_POINTS as f64).exp() - 1.0
            }
        })
        .collect()
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return whichever end has the smaller residual.
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn break_even_example() {
        let cf = Cashflow::series(&[-100.0, 110.0]);
        assert!(npv(&cf, 0.10).unwrap().abs() < 1e-9);
        let r = irr(&cf).unwrap();
        assert!((r.rate - 0.10).abs() < 1e-9, "{}", r.rate);
        assert!(!r.multiple_roots);
    }

    #[test]
    fn zero_rate_is_plain_sum() {
        let cf = Cashflow::series(&[-3.5, 1.25, 7.0, -0.5]);
        let sum: f64 = cf.iter().map(|c| c.amount).sum();
        assert_eq!(npv(&cf, 0.0).unwrap(), sum);
    }

    #[test]
    fn irr_matches_dense_scan() {
        let cf = Cashflow::series(&[-100.0, 50.0, 50.0]);
        let r = irr(&cf).unwrap();
        // Scan oracle on a 1e-4 grid.
        let mut best = f64::NAN;
        let mut prev = npv(&cf, -0.5).unwrap();
        let mut x = -0.5;
        while x < 1.0 {
            let next = x + 1e-4;
            let v = npv(&cf, next).unwrap();
            if prev == 0.0 || prev.signum() != v.signum() {
                best = if prev == 0.0 { x } else { next };
                break;
            }
            prev = v;
            x = next;
        }
        assert!((r.rate - best).abs() <= 1e-4, "{} vs {best}", r.rate);
        assert!(npv(&cf, r.rate).unwrap().abs() / 200.0 < IRR_TOLERANCE);
    }

    #[test]
    fn irr_errors() {
        assert_eq!(
            irr(&Cashflow::series(&[-1.0, -2.0])),
            Err(AppraisalError::NoSignChange)
        );
        // Root at r = 19 lies outside the bracket.
        assert!(matches!(
            irr(&Cashflow::series(&[-1.0, 20.0])),
            Err(AppraisalError::NoRootInBracket { .. })
        ));
        assert!(npv(&Cashflow::series(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn multiple_roots_flagged() {
        // (1+r)^2 - 2.3(1+r) + 1.32 = 0 at r = 0.1 and r = 0.2.
        let cf = Cashflow::series(&[-1.0, 2.3, -1.32]);
        let r = irr(&cf).unwrap();
        assert!(r.multiple_roots);
        assert_eq!(r.roots.len(), 2);
        assert!((r.rate - 0.1).abs() < 1e-8, "{}", r.rate);
    }

    #[test]
    fn unsorted_periods() {
        let cf = [Cashflow::new(1, 110.0), Cashflow::new(0, -100.0)];
        assert!((irr(&cf).unwrap().rate - 0.10).abs() < 1e-9);
    }

    fn conventional() -> impl Strategy<Value = Vec<Cashflow>> {
        (
            prop::collection::vec(1.0f64..1000.0, 1..4),
            prop::collection::vec(1.0f64..1000.0, 1..20),
        )
            .prop_map(|(costs, gains)| {
                let mut amounts: Vec<f64> = costs.iter().map(|c| -c).collect();
                amounts.extend(gains);
                Cashflow::series(&amounts)
            })
    }

    proptest! {
        #[test]
        fn npv_matches_brute_force(amounts in prop::collection::vec(-1e4f64..1e4, 5), rate in -0.9f64..5.0) {
            let cf = Cashflow::series(&amounts);
            let mut brute = 0.0;
            for (t, a) in amounts.iter().enumerate() {
                let mut d = 1.0;
                for _ in 0..t { d *= 1.0 + rate; }
                brute += a / d;
            }
            let got = npv(&cf, rate).unwrap();
            let scale: f64 = amounts.iter().map(|a| a.abs()).sum::<f64>() * (1.0 + 1.0 / (0.1f64).powi(5));
            prop_assert!((got - brute).abs() <= 1e-12 * scale);
        }

        #[test]
        fn single_outlay_npv_decreasing(cf in conventional(), r1 in -0.9f64..5.0, gap in 0.01f64..2.0) {
            // Fold every outlay into period 0.
            let outlay: f64 = cf.iter().filter(|c| c.amount < 0.0).map(|c| c.amount).sum();
            let mut shaped = vec![Cashflow::new(0, outlay)];
            shaped.extend(cf.iter().filter(|c| c.amount > 0.0).copied());
            let r2 = r1 + gap;
            prop_assert!(npv(&shaped, r2).unwrap() < npv(&shaped, r1).unwrap());
        }

        #[test]
        fn conventional_npv_crosses_zero_once(cf in conventional()) {
            // Later outlays can make NPV rise with the rate, but its sign
            // still flips at most once.
            let mut flips = 0;
            let mut prev = npv(&cf, -0.9).unwrap();
            for i in 1..=600 {
                let v = npv(&cf, -0.9 + i as f64 * 0.01).unwrap();
                if v != 0.0 && prev != 0.0 && v.signum() != prev.signum() {
                    flips += 1;
                }
                prev = v;
            }
            prop_assert!(flips <= 1);
        }

        #[test]
        fn irr_residual_within_tolerance(cf in conventional()) {
            if let Ok(r) = irr(&cf) {
                let scale: f64 = cf.iter().map(|c| c.amount.abs()).sum();
                prop_assert!(npv(&cf, r.rate).unwrap().abs() / scale < IRR_TOLERANCE);
                prop_assert!(!r.multiple_roots);
            }
        }
    }
}
