//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refcast_core::biassim::{calibration_report, simulate, SimConfig};
use refcast_core::governance::appraisal::IRR_TOLERANCE;
use refcast_core::governance::diagnostic::archetypes_from_json;
use refcast_core::governance::{
    apportion_cost_increase, classify, irr, npv, Cashflow, CostIncreaseEvent, Quadrant, Thresholds,
};
use refcast_core::ingest::{parse_dataset, render_dataset, DataFormat};
use refcast_core::model::{deviation, relative_deviation, DeviationMetric, ProjectRecord};
use refcast_core::rcf::{
    forecast_with_uplift, regress, ClassMean, IntuitiveEstimate, OutcomeVariable,
    ReliabilityEstimate,
};
use refcast_core::refclass::{build_class, uplift, ClassFilter, ReferenceClass, UpliftQuery};
use rust_decimal::Decimal;

const EDINBURGH_P80_TOLERANCE_M: &str = "2";
const DEVIATION_IDENTITY_TOLERANCE: f64 = 1e-12;
const OPERA_HOUSE_TOLERANCE: f64 = 1e-3;
const IRR_EXAMPLE_TOLERANCE: f64 = 1e-9;
const DECEPTION_MIN_EXCEEDANCE: f64 = 0.65;
const SIMULATION_TIME_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rail_class() -> ReferenceClass {
    let filter = ClassFilter::for_types(["rail"], DeviationMetric::CostOverrun)
        .with_regime_tag("dft-comparable");
    build_class(&common::load_fixture("edinburgh_rail.csv"), &filter).unwrap()
}

fn c1_regression() -> Outcome {
    let r = regress(
        &ClassMean::new(7.0, OutcomeVariable::TotalCost),
        &IntuitiveEstimate::new(4.0, OutcomeVariable::TotalCost).unwrap(),
        &ReliabilityEstimate::subjective(0.6).unwrap(),
    )
    .unwrap();
    ensure(
        r.corrected == 5.2,
        format!("regress(7, 4, 0.6) = {}", r.corrected),
    )
}

fn c2_edinburgh() -> Outcome {
    let class = rail_class();
    let base = common::gbp("255");
    let p50 = forecast_with_uplift(&base, &class, &UpliftQuery::new(0.5).unwrap()).unwrap();
    let p80 = forecast_with_uplift(&base, &class, &UpliftQuery::new(0.2).unwrap()).unwrap();
    let gap = (p80.budget.amount() - common::dec("400")).abs();
    ensure(
        p50.budget.amount() == common::dec("357.0")
            && gap <= common::dec(EDINBURGH_P80_TOLERANCE_M),
        format!("P50 budget {}, P80 budget {}", p50.budget, p80.budget),
    )
}

fn c3_road() -> Outcome {
    let class = build_class(
        &common::load_fixture("dft_road.csv"),
        &ClassFilter::for_types(["road"], DeviationMetric::CostOverrun),
    )
    .unwrap();
    let p50 = uplift(&class, &UpliftQuery::new(0.5).unwrap()).fraction;
    let p80 = uplift(&class, &UpliftQuery::new(0.2).unwrap()).fraction;
    ensure(
        p50 == 0.15 && p80 == 0.32,
        format!("uplift P50 {p50}, P80 {p80}"),
    )
}

fn c4_allowance() -> Outcome {
    let class = rail_class();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let base = Decimal::new(
            rng.random_range(1..10_000_000_000i64),
            rng.random_range(0..4),
        );
        let risk = [0.5, 0.2, 0.1, 0.35][i % 4];
        let b = forecast_with_uplift(
            &common::gbp(&base.to_string()),
            &class,
            &UpliftQuery::new(risk).unwrap(),
        )
        .unwrap();
        let uplift_amount = b.budget.amount() - base;
        let allowance = b.allowance.allowance_amount().amount();
        if allowance * Decimal::TWO != uplift_amount || allowance != uplift_amount / Decimal::TWO {
            return Err(format!(
                "base {base}: allowance {allowance} vs uplift {uplift_amount}"
            ));
        }
    }
    Ok("allowance = 50% of uplift amount for 100 random bases".into())
}

fn c5_quantile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.random_range(refcast_core::refclass::MIN_CLASS_SIZE..=1000);
        let devs: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-300i64..=3000) as f64 / 1000.0)
            .collect();
        let class = common::class_from_deviations(&devs);
        let j: usize = rng.random_range(1..1000);
        let got = uplift(&class, &UpliftQuery::new(j as f64 / 1000.0).unwrap()).raw_fraction;
        let mut sorted = class.deviations().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = sorted[(n * (1000 - j)).div_ceil(1000).max(1) - 1];
        if got != want {
            return Err(format!("n {n}, risk {j}/1000: {got} vs oracle {want}"));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} samples agree with the sort-and-index oracle"
    ))
}

fn sim_fixture(name: &str) -> SimConfig {
    let path = common::fixture_path(&format!("sim/{name}"));
    SimConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn c6_simulator() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["bias_free.json", "dft_anchored.json"] {
        let config = sim_fixture(name);
        ok &= config.trials >= 10_000;
        let rows = calibration_report(&simulate(&config).unwrap());
        ok &= rows.iter().all(|r| r.within_tolerance);
        lines.push(format!(
            "{name}: {}",
            rows.iter()
                .map(|r| format!("p={} exc={:.4}±{:.4}", r.risk, r.empirical, r.tolerance))
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    let mut deception = sim_fixture("heavy_deception.json");
    deception.debias = false;
    let raw = simulate(&deception).unwrap();
    let raw_p50 = raw.uplift_calibration[0].exceedance;
    ok &= raw_p50 > DECEPTION_MIN_EXCEEDANCE;
    deception.debias = true;
    let fixed = calibration_report(&simulate(&deception).unwrap());
    ok &= fixed.iter().all(|r| r.within_tolerance);
    lines.push(format!(
        "deception s={}: raw P50 exceedance {raw_p50:.4}, debiased {}",
        deception.bias.strategic_shave,
        fixed
            .iter()
            .map(|r| format!("p={} exc={:.4}", r.risk, r.empirical))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    let elapsed = start.elapsed();
    ok &= elapsed < SIMULATION_TIME_LIMIT;
    lines.push(format!("elapsed {:.1}s", elapsed.as_secs_f64()));
    ensure(ok, lines.join("; "))
}

fn c7_cost_sharing() -> Outcome {
    let event = |amount: &str| CostIncreaseEvent {
        amount: common::gbp(amount),
        cumulative_prior_increases: common::gbp("0"),
        risk_allowance: common::gbp("50"),
    };
    let a = apportion_cost_increase(&event("40")).unwrap();
    let b = apportion_cost_increase(&event("80")).unwrap();
    let d = common::dec;
    ensure(
        a.local_share.amount() == d("20")
            && a.funder_share.amount() == d("20")
            && !a.requires_new_approval
            && b.local_share.amount() == d("55")
            && b.funder_share.amount() == d("25")
            && b.requires_new_approval,
        format!(
            "40 -> {}/{} approval={}; 80 -> {}/{} approval={}",
            a.local_share.amount(),
            a.funder_share.amount(),
            a.requires_new_approval,
            b.local_share.amount(),
            b.funder_share.amount(),
            b.requires_new_approval
        ),
    )
}

fn c8_quadrants() -> Outcome {
    let text = std::fs::read_to_string(common::fixture_path("archetype_profiles.json")).unwrap();
    let archetypes = archetypes_from_json(&text).unwrap();
    let expected = [
        ("weather-forecaster", Quadrant::Unbiased),
        ("solo-entrepreneur", Quadrant::DelusionDominant),
        ("game-studio-release-dates", Quadrant::DeceptionDominant),
        ("one-off-megaproject", Quadrant::Both),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, want) in expected {
        let a = archetypes.iter().find(|a| a.name == name).unwrap();
        let got = classify(&a.profile, Thresholds::default());
        ok &= got == want;
        parts.push(format!("{name} -> {got}"));
    }
    ensure(ok, parts.join(", "))
}

fn c9_irr() -> Outcome {
    let example = irr(&Cashflow::series(&[-100.0, 110.0])).unwrap().rate;
    if (example - 0.10).abs() > IRR_EXAMPLE_TOLERANCE {
        return Err(format!("irr([-100, 110]) = {example}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let outlays = rng.random_range(1..4);
        let gains = rng.random_range(1..25);
        let mut amounts: Vec<f64> = (0..outlays)
            .map(|_| -rng.random_range(10.0..1000.0))
            .collect();
        let cost: f64 = -amounts.iter().sum::<f64>();
        // Total inflow between 0.5x and 4x the outlay.
        let target = cost * rng.random_range(0.5..4.0);
        let weights: Vec<f64> = (0..gains).map(|_| rng.random_range(0.1..1.0)).collect();
        let wsum: f64 = weights.iter().sum();
        amounts.extend(weights.iter().map(|w| target * w / wsum));
        let cf = Cashflow::series(&amounts);
        let r = irr(&cf).map_err(|e| format!("cashflow {i}: {e}"))?;
        let scale: f64 = amounts.iter().map(|a| a.abs()).sum();
        let residual = npv(&cf, r.rate).unwrap().abs() / scale;
        worst = worst.max(residual);
        if residual >= IRR_TOLERANCE {
            return Err(format!("cashflow {i}: residual {residual:e}"));
        }
    }
    Ok(format!(
        "irr([-100,110]) = {example}; worst normalized residual {worst:e} over 500 cashflows"
    ))
}

fn c10_round_trip() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = common::dataset(8);
    let mut empty_optionals = 0;
    for i in 0..500 {
        let d = strategy.new_tree(&mut runner).unwrap().current();
        empty_optionals += d.records().iter().filter(|r| bare(r)).count();
        for format in [DataFormat::Csv, DataFormat::Json] {
            let text = render_dataset(&d, format).unwrap();
            let back =
                parse_dataset(&text, format, "mem").map_err(|e| format!("dataset {i}: {e}"))?;
            if !back.dataset.same_content(&d) {
                return Err(format!("dataset {i} changed in {format:?}"));
            }
        }
    }
    ensure(
        empty_optionals > 0,
        format!("500 datasets round-trip in CSV and JSON ({empty_optionals} records with every optional absent)"),
    )
}

fn bare(r: &ProjectRecord) -> bool {
    r.actual_cost().is_none()
        && r.benefit_unit().is_none()
        && r.forecast_duration_days().is_none()
        && r.actual_duration_days().is_none()
        && r.regime_tags().is_empty()
        && r.attributes().is_empty()
}

fn c11_deviation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let f = Decimal::new(
            rng.random_range(1..100_000_000_000i64),
            rng.random_range(0..6),
        );
        let o: f64 = rng.random_range(-0.99..25.0);
        let actual = f * (Decimal::ONE + Decimal::from_f64_retain(o).unwrap());
        let got = relative_deviation(f, actual, DeviationMetric::CostOverrun).unwrap();
        worst = worst.max((got - o).abs());
    }
    let opera = ProjectRecord::builder("sydney-opera-house", "building", common::gbp("7"))
        .actual_cost(Some(common::gbp("102")))
        .build()
        .unwrap();
    let overrun = deviation(&opera, DeviationMetric::CostOverrun).unwrap();
    ensure(
        worst <= DEVIATION_IDENTITY_TOLERANCE && (overrun - 13.571).abs() <= OPERA_HOUSE_TOLERANCE,
        format!("worst identity error {worst:e}; Opera House 7 -> 102 overrun {overrun:.4}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("regression formula exactness", c1_regression),
        ("Edinburgh tram budgets", c2_edinburgh),
        ("road uplift anchors", c3_road),
        ("risk allowance rule", c4_allowance),
        ("quantile oracle equivalence", c5_quantile_oracle),
        ("simulator calibration", c6_simulator),
        ("cost-sharing arithmetic", c7_cost_sharing),
        ("diagnostic quadrants", c8_quadrants),
        ("IRR property", c9_irr),
        ("ingestion round-trip", c10_round_trip),
        ("deviation identities", c11_deviation),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
