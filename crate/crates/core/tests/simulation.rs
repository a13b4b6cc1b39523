use proptest::prelude::*;
use refcast_core::biassim::{calibration_report, simulate, BiasParams, SimConfig, SimResult};

fn fixture(name: &str) -> SimConfig {
    let path = format!("{}/fixtures/sim/{name}", env!("CARGO_MANIFEST_DIR"));
    SimConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn print_rows(label: &str, result: &SimResult) {
    for row in calibration_report(result) {
        println!(
            "{label}: p={} empirical={:.5} tol={:.5} ok={}",
            row.risk, row.empirical, row.tolerance, row.within_tolerance
        );
    }
}

#[test]
fn bias_free_config_is_calibrated() {
    let r = simulate(&fixture("bias_free.json")).unwrap();
    print_rows("bias-free", &r);
    assert!(calibration_report(&r)
        .iter()
        .all(|row| row.within_tolerance));
}

#[test]
fn dft_anchored_config_matches_road_uplifts() {
    let r = simulate(&fixture("dft_anchored.json")).unwrap();
    print_rows("dft", &r);
    assert!(calibration_report(&r)
        .iter()
        .all(|row| row.within_tolerance));
    let p50 = r.uplift_calibration[0].mean_uplift;
    let p80 = r.uplift_calibration[1].mean_uplift;
    println!("dft uplifts p50={p50:.4} p80={p80:.4}");
    assert!((p50 - 0.15).abs() < 0.01 && (p80 - 0.32).abs() < 0.01);
}

#[test]
fn heavy_deception_needs_debiasing() {
    let mut config = fixture("heavy_deception.json");
    let raw = simulate(&config).unwrap();
    print_rows("deception raw", &raw);
    assert!(raw.uplift_calibration[0].exceedance > 0.65);
    assert!(!calibration_report(&raw)[0].within_tolerance);
    config.debias = true;
    let fixed = simulate(&config).unwrap();
    print_rows("deception debiased", &fixed);
    assert!(calibration_report(&fixed)
        .iter()
        .all(|row| row.within_tolerance));
}

#[test]
fn rail_like_mean_overrun() {
    let r = simulate(&fixture("rail_like.json")).unwrap();
    println!("rail-like mean overrun {:.4}", r.mean_overrun);
    assert!((r.mean_overrun - 0.45).abs() < 0.01);
}

fn small(bias: BiasParams) -> SimConfig {
    SimConfig {
        n_projects: 20,
        trials: 5,
        seed: 3,
        true_cost: refcast_core::biassim::LogNormalParams {
            log_mean: 3.0,
            log_stdev: 0.7,
        },
        noise_stdev: 0.3,
        bias,
        debias: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_shave_or_optimism_never_lowers_mean_overrun(
        d in 0.2f64..=1.0, a in 0.0f64..0.99, s in 0.0f64..0.9, c in 0.0f64..=1.0,
        pt in any::<bool>(), ds in 0.0f64..0.1, dd in 0.0f64..0.19,
    ) {
        let base = BiasParams { optimism_multiplier: d, anchor_weight: a, strategic_shave: s,
            competition_intensity: c, anchor_passthrough: pt };
        let m0 = simulate(&small(base)).unwrap().mean_overrun;
        let shaved = BiasParams { strategic_shave: s + ds, ..base };
        prop_assert!(simulate(&small(shaved)).unwrap().mean_overrun >= m0);
        let gloomier = BiasParams { optimism_multiplier: (d - dd).max(0.01), ..base };
        prop_assert!(simulate(&small(gloomier)).unwrap().mean_overrun >= m0);
    }
}
