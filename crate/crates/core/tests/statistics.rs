mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use refcast_core::rcf::estimate_reliability;
use refcast_core::refclass::quantile::{nearest_rank_quantile, sorted_copy};
use refcast_core::refclass::{
    comparability_test, uplift, UpliftQuery, DEFAULT_ALPHA, MIN_CLASS_SIZE,
};

/// Sort-and-index oracle with integer arithmetic: the value at one-based
/// rank `ceil(n * (1000 - j) / 1000)` for risk `j / 1000`.
fn oracle(values: &[f64], j: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rank = (n * (1000 - j)).div_ceil(1000).max(1);
    sorted[rank - 1]
}

#[test]
fn nearest_rank_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for sample in 0..1000 {
        let n = rng.random_range(1..=1000);
        // Values on a 0.001 grid so ties occur.
        let devs: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-300i64..=3000) as f64 / 1000.0)
            .collect();
        if n < MIN_CLASS_SIZE {
            // Too small for a class; check the primitive directly.
            let sorted = sorted_copy(&devs);
            let j = rng.random_range(1..1000);
            assert_eq!(
                nearest_rank_quantile(&sorted, 1.0 - j as f64 / 1000.0),
                oracle(&devs, j)
            );
            continue;
        }
        let class = common::class_from_deviations(&devs);
        for _ in 0..3 {
            let j = rng.random_range(1..1000);
            let got = uplift(&class, &UpliftQuery::new(j as f64 / 1000.0).unwrap());
            let want = oracle(class.deviations(), j);
            assert_eq!(got.raw_fraction, want, "sample {sample}, n {n}, j {j}");

            // Coverage: at least 1 - p of the class at or below the uplift,
            // and the uplift is the smallest value with that property.
            let at_or_below = class.deviations().iter().filter(|&&d| d <= want).count();
            let below = class.deviations().iter().filter(|&&d| d < want).count();
            assert!(at_or_below * 1000 >= n * (1000 - j));
            assert!(below * 1000 < n * (1000 - j));
        }
    }
}

#[test]
fn ks_accepts_same_population() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let normal = Normal::new(0.3, 0.25).unwrap();
    let trials = 1000;
    let mut comparable = 0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
        let test = comparability_test(
            &common::class_from_deviations(&a),
            &common::class_from_deviations(&b),
            DEFAULT_ALPHA,
        )
        .unwrap();
        comparable += test.comparable as usize;
    }
    println!("comparable in {comparable} of {trials}");
    assert!(comparable * 100 >= 95 * trials);
}

#[test]
fn ks_rejects_shifted_population() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a: Vec<f64> = (0..30)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.1)
        .collect();
    let b: Vec<f64> = (0..30)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.1 + 0.5)
        .collect();
    let test = comparability_test(
        &common::class_from_deviations(&a),
        &common::class_from_deviations(&b),
        DEFAULT_ALPHA,
    )
    .unwrap();
    assert!(!test.comparable);
}

#[test]
fn reliability_recovers_known_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let rho = 0.8f64;
    let reps = 2000;
    let mut total = 0.0;
    for _ in 0..reps {
        let pairs: Vec<(f64, f64)> = (0..20)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                (x, rho * x + (1.0 - rho * rho).sqrt() * z)
            })
            .collect();
        total += estimate_reliability(&pairs).unwrap().rho;
    }
    let mean = total / reps as f64;
    println!("mean estimate {mean:.4}");
    assert!((mean - rho).abs() < 0.1);
}
