#![allow(dead_code)]

use std::path::PathBuf;
use std::str::FromStr;

use proptest::prelude::*;
use refcast_core::ingest::{load_dataset, DataFormat, Dataset};
use refcast_core::model::{Currency, DeviationMetric, Money, PriceBasis, ProjectRecord, Stage};
use refcast_core::refclass::{ClassFilter, ReferenceClass};
use rust_decimal::Decimal;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> Dataset {
    load_dataset(&fixture_path(name), DataFormat::Csv)
        .unwrap_or_else(|e| panic!("{name}: {e}"))
        .dataset
}

pub fn dec(s: &str) -> Decimal {
    Decimal::from_str(s).unwrap()
}

pub fn gbp(amount: &str) -> Money {
    Money::new(
        dec(amount),
        Currency::new("GBP").unwrap(),
        PriceBasis::Constant { base_year: 2004 },
    )
    .unwrap()
}

fn positive_decimal() -> impl Strategy<Value = Decimal> {
    (1i64..10_000_000_000, 0u32..5).prop_map(|(m, scale)| Decimal::new(m, scale))
}

fn word() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9-]{0,7}"
}

fn attribute_value() -> impl Strategy<Value = String> {
    // Commas, quotes and inner spaces exercise CSV quoting.
    "[A-Za-z0-9][A-Za-z0-9 ,\"'.]{0,10}[A-Za-z0-9]"
}

fn record(id: String) -> impl Strategy<Value = ProjectRecord> {
    let unit = (
        prop::sample::select(vec!["GBP", "USD", "DKK", "EUR"]),
        prop::option::of(1950i32..2030),
    );
    let benefit = prop::option::of((
        word(),
        prop::option::of(positive_decimal()),
        prop::option::of(positive_decimal()),
    ));
    let durations = (
        prop::option::of(1u32..20_000),
        prop::option::of(1u32..20_000),
    );
    let tags = prop::collection::btree_set(word(), 0..3);
    let attrs = prop::collection::btree_map("x_[a-z]{1,4}", attribute_value(), 0..3);
    (
        word(),
        prop::sample::select(Stage::ALL.to_vec()),
        1900i32..2030,
        unit,
        positive_decimal(),
        prop::option::of(positive_decimal()),
        benefit,
        durations,
        tags,
        attrs,
    )
        .prop_map(
            move |(
                ptype,
                stage,
                year,
                (cur, base_year),
                forecast,
                actual,
                benefit,
                durations,
                tags,
                attrs,
            )| {
                let basis = match base_year {
                    Some(y) => PriceBasis::Constant { base_year: y },
                    None => PriceBasis::Nominal,
                };
                let money = |a| Money::new(a, Currency::new(cur).unwrap(), basis).unwrap();
                let mut b = ProjectRecord::builder(&id, &ptype, money(forecast))
                    .stage(stage)
                    .year(year)
                    .actual_cost(actual.map(money))
                    .durations(durations.0, durations.1)
                    .regime_tags(tags);
                if let Some((unit, f, a)) = benefit {
                    b = b.benefit(Some(unit), f, a);
                }
                for (k, v) in &attrs {
                    b = b.attribute(k, v);
                }
                b.build().unwrap()
            },
        )
}

/// Valid datasets of up to `max` records, including records with every
/// optional field absent.
pub fn dataset(max: usize) -> impl Strategy<Value = Dataset> {
    (0..=max).prop_flat_map(|n| {
        let records: Vec<_> = (0..n)
            .map(|i| record(format!("P-{i:04}")).boxed())
            .collect();
        records.prop_map(|records| Dataset::new(records, "generated", 1).unwrap().0)
    })
}

/// Cost-overrun class whose members realize the given deviations.
pub fn class_from_deviations(devs: &[f64]) -> ReferenceClass {
    let forecast = Decimal::from(1_000_000);
    let records: Vec<ProjectRecord> = devs
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let actual = forecast * (Decimal::ONE + Decimal::from_f64_retain(d).unwrap());
            let money =
                |a| Money::new(a, Currency::new("GBP").unwrap(), PriceBasis::Nominal).unwrap();
            ProjectRecord::builder(&format!("S-{i}"), "synthetic", money(forecast))
                .actual_cost(Some(money(actual.round_dp(12))))
                .build()
                .unwrap()
        })
        .collect();
    ReferenceClass::from_records(&records, &ClassFilter::all(DeviationMetric::CostOverrun)).unwrap()
}
