//! Help text for every subcommand, checked against files in tests/golden.
//! Set REFCAST_BLESS=1 to rewrite them.

use std::fs;
use std::path::Path;
use std::process::Command;

const SUBCOMMANDS: [&str; 15] = [
    "ingest",
    "class-build",
    "class-test",
    "summarize",
    "uplift",
    "forecast",
    "allowance",
    "regress",
    "diagnose",
    "check-funding",
    "apportion",
    "risk-register",
    "appraise",
    "simulate",
    "report",
];

fn help(args: &[&str]) -> String {
    let o = Command::new(env!("CARGO_BIN_EXE_refcast"))
        .args(args)
        .env("REFCAST_NO_COLOR", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{args:?}");
    String::from_utf8(o.stdout).unwrap()
}

fn check(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.txt"));
    if std::env::var_os("REFCAST_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with REFCAST_BLESS=1", path.display()));
    assert_eq!(actual, expected, "help for {name} changed");
}

#[test]
fn top_level_help() {
    let text = help(&["--help"]);
    for sub in SUBCOMMANDS {
        assert!(text.contains(sub), "{sub} missing from top-level help");
    }
    check("refcast", &text);
}

#[test]
fn subcommand_help() {
    for sub in SUBCOMMANDS {
        let text = help(&[sub, "--help"]);
        assert!(text.contains("--json"), "{sub}");
        assert!(text.contains("--help"), "{sub}");
        check(sub, &text);
    }
}

#[test]
fn flag_inventory() {
    let expect: [(&str, &[&str]); 8] = [
        ("ingest", &["--format", "--out"]),
        ("class-build", &["--filter", "--format", "--out"]),
        ("class-test", &["--alpha"]),
        (
            "uplift",
            &[
                "--class",
                "--data",
                "--filter",
                "--risk",
                "--clamp-nonnegative",
            ],
        ),
        (
            "regress",
            &["--mean", "--intuitive", "--rho", "--pairs", "--variable"],
        ),
        ("simulate", &["--seed", "--trials", "--no-debias", "--out"]),
        (
            "report",
            &[
                "--base",
                "--intuitive",
                "--rho",
                "--risk",
                "--currency",
                "--price-basis",
                "--base-year",
                "--out",
            ],
        ),
        (
            "forecast",
            &[
                "--base",
                "--risk",
                "--currency",
                "--price-basis",
                "--base-year",
            ],
        ),
    ];
    for (sub, flags) in expect {
        let text = help(&[sub, "--help"]);
        for flag in flags {
            assert!(text.contains(flag), "{sub} help lacks {flag}");
        }
    }
}
