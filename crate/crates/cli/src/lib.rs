//! The `refcast` command-line tool.

pub mod args;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::Path;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::Parser;
use refcast_core::biassim::{calibration_csv, calibration_report, simulate, SimConfig};
use refcast_core::governance::diagnostic::{archetypes_from_json, Thresholds};
use refcast_core::governance::register::register_from_json;
use refcast_core::governance::{
    all_pass, apportion_cost_increase, check_funding, classify, irr, npv, validate_risk_register,
    Cashflow, CostIncreaseEvent, DiagnosticProfile, FundingStructure,
};
use refcast_core::ingest::{parse_dataset, render_dataset, save_dataset, DataFormat, Loaded};
use refcast_core::model::{Currency, ModelError, Money, PriceBasis};
use refcast_core::rcf::{
    estimate_reliability, forecast_with_uplift, regress, ClassMean, IntuitiveEstimate,
    OutcomeVariable, ReliabilityEstimate, UpliftedBudget,
};
use refcast_core::refclass::{
    build_class, comparability_test, summarize, uplift, ClassFilter, ReferenceClass, UpliftQuery,
};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use args::{ClassSource, Cli, Command, Format, UnitArgs, Variable};
use error::{CliError, EXIT_USAGE};
use report::*;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Reports go to `out`, errors to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => return clap_failure(e, out, err),
    };
    let style = Style {
        color: std::env::var_os("REFCAST_NO_COLOR").is_none() && std::io::stdout().is_terminal(),
    };
    match execute(&cli, style) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit
        }
    }
}

fn clap_failure(e: clap::Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = e.to_string();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = err.write_all(text.as_bytes());
            EXIT_USAGE
        }
        _ => {
            let message = text.strip_prefix("error: ").unwrap_or(&text).trim_end();
            let _ = writeln!(err, "{}", CliError::usage(message));
            EXIT_USAGE
        }
    }
}

fn emit<R: Serialize + Render>(report: &R, json: bool, style: Style) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
        s.push('\n');
        s
    } else {
        report.render(style)
    }
}

fn execute(cli: &Cli, style: Style) -> Result<String, CliError> {
    let json = cli.json;
    Ok(match &cli.command {
        Command::Ingest(a) => emit(&ingest(a)?, json, style),
        Command::ClassBuild(a) => emit(&class_build(a)?, json, style),
        Command::ClassTest(a) => emit(&class_test(a)?, json, style),
        Command::Summarize(a) => emit(&summarize_cmd(a)?, json, style),
        Command::Uplift(a) => emit(&uplift_cmd(a)?, json, style),
        Command::Forecast(a) => emit(&budget(a)?, json, style),
        Command::Allowance(a) => emit(&AllowanceReport(budget(a)?), json, style),
        Command::Regress(a) => emit(&regress_cmd(a)?, json, style),
        Command::Diagnose(a) => emit(&diagnose(a)?, json, style),
        Command::CheckFunding(a) => emit(&funding(&a.input)?, json, style),
        Command::Apportion(a) => emit(&apportion(a)?, json, style),
        Command::RiskRegister(a) => emit(&risk_register(&a.input)?, json, style),
        Command::Appraise(a) => emit(&appraise(a)?, json, style),
        Command::Simulate(a) => emit(&simulate_cmd(a)?, json, style),
        Command::Report(a) => emit(&narrative(a)?, json, style),
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn data_format(path: &Path, explicit: Option<Format>) -> Result<DataFormat, CliError> {
    match explicit {
        Some(Format::Csv) => Ok(DataFormat::Csv),
        Some(Format::Json) => Ok(DataFormat::Json),
        None => DataFormat::from_path(path).ok_or_else(|| {
            CliError::usage(format!(
                "cannot tell the format of {} from its extension; pass --format",
                path.display()
            ))
        }),
    }
}

fn load_data(path: &Path, format: Option<Format>) -> Result<Loaded, CliError> {
    let format = data_format(path, format)?;
    let text = read(path)?;
    Ok(parse_dataset(&text, format, &path.display().to_string())?)
}

fn load_filter(path: &Path) -> Result<ClassFilter, CliError> {
    Ok(ClassFilter::from_json(&read(path)?)?)
}

/// On-disk form of a built class: its filter and member records.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    filter: ClassFilter,
    dataset: serde_json::Value,
}

fn read_class_file(path: &Path) -> Result<ReferenceClass, CliError> {
    let file: ClassFile = serde_json::from_str(&read(path)?).map_err(|e| {
        CliError::domain(
            "PARSE",
            format!("{}: not a class file: {e}", path.display()),
        )
    })?;
    let loaded = parse_dataset(
        &file.dataset.to_string(),
        DataFormat::Json,
        &path.display().to_string(),
    )?;
    Ok(build_class(&loaded.dataset, &file.filter)?)
}

fn load_class(src: &ClassSource) -> Result<ReferenceClass, CliError> {
    match (&src.class, &src.data, &src.filter) {
        (Some(path), _, _) => read_class_file(path),
        (None, Some(data), Some(filter)) => {
            let loaded = load_data(data, src.format)?;
            Ok(build_class(&loaded.dataset, &load_filter(filter)?)?)
        }
        _ => Err(CliError::usage(
            "pass --class, or --data together with --filter",
        )),
    }
}

fn parse_amount(text: &str, flag: &str) -> Result<Decimal, CliError> {
    let t = text.trim();
    Decimal::from_str(t)
        .or_else(|_| Decimal::from_scientific(t))
        .map_err(|_| CliError::usage(format!("invalid amount for {flag}: {text:?}")))
}

/// Money from a command-line amount. Unit flags override `default`; without
/// a default both currency and price basis must be given.
fn money(
    text: &str,
    flag: &str,
    unit: &UnitArgs,
    default: Option<&Money>,
) -> Result<Money, CliError> {
    let amount = parse_amount(text, flag)?;
    let currency = match (&unit.currency, default) {
        (Some(c), _) => Currency::new(c)?,
        (None, Some(d)) => d.currency().clone(),
        (None, None) => return Err(CliError::usage("--currency is required")),
    };
    let basis = match (&unit.price_basis, unit.base_year, default) {
        (Some(tag), year, _) => PriceBasis::from_parts(tag, year)?,
        (None, Some(year), _) => PriceBasis::Constant { base_year: year },
        (None, None, Some(d)) => d.basis(),
        (None, None, None) => return Err(CliError::usage("--price-basis is required")),
    };
    let m = Money::new(amount, currency, basis)?;
    if let Some(d) = default {
        if !m.same_unit(d) {
            return Err(ModelError::BasisMismatch {
                left: m.unit_label(),
                right: d.unit_label(),
            }
            .into());
        }
    }
    Ok(m)
}

fn class_unit(class: &ReferenceClass) -> &Money {
    class.members()[0].forecast_cost()
}

#[derive(Deserialize)]
struct Pair {
    prediction: f64,
    outcome: f64,
}

fn load_pairs(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader
        .deserialize::<Pair>()
        .map(|row| {
            row.map(|p| (p.prediction, p.outcome))
                .map_err(|e| CliError::domain("PARSE", format!("{}: {e}", path.display())))
        })
        .collect()
}

fn reliability(rho: Option<f64>, pairs: Option<&Path>) -> Result<ReliabilityEstimate, CliError> {
    match (rho, pairs) {
        (Some(rho), _) => Ok(ReliabilityEstimate::subjective(rho)?),
        (None, Some(path)) => Ok(estimate_reliability(&load_pairs(path)?)?),
        (None, None) => Err(CliError::usage("pass --rho or --pairs")),
    }
}

fn ingest(a: &args::IngestArgs) -> Result<IngestReport, CliError> {
    let loaded = load_data(&a.input, a.format)?;
    let written = match &a.out {
        Some(path) => {
            save_dataset(&loaded.dataset, path, data_format(path, None)?)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok(IngestReport {
        source: loaded.dataset.source().to_string(),
        records: loaded.dataset.len(),
        schema_version: loaded.dataset.schema_version(),
        warnings: loaded
            .report
            .warnings
            .iter()
            .map(|w| w.to_string())
            .collect(),
        written,
    })
}

fn class_build(a: &args::ClassBuildArgs) -> Result<ClassReport, CliError> {
    let loaded = load_data(&a.data, a.format)?;
    let filter = load_filter(&a.filter)?;
    let class = build_class(&loaded.dataset, &filter)?;
    let written = match &a.out {
        Some(path) => {
            let (members, _) = refcast_core::ingest::Dataset::new(
                class.members().to_vec(),
                loaded.dataset.source(),
                loaded.dataset.schema_version(),
            )
            .map_err(|r| CliError::from(refcast_core::ingest::IngestError::Invalid(r)))?;
            let dataset = render_dataset(&members, DataFormat::Json)?;
            let file = ClassFile {
                filter: filter.clone(),
                dataset: serde_json::from_str(&dataset).expect("rendered dataset is JSON"),
            };
            let mut text = serde_json::to_string_pretty(&file).expect("class file serializes");
            text.push('\n');
            write(path, &text)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok(ClassReport {
        class: class.label(),
        metric: class.metric().to_string(),
        n: class.len(),
        members: class.members().iter().map(|m| m.id().to_string()).collect(),
        warnings: class.warnings().to_vec(),
        written,
    })
}

fn class_test(a: &args::ClassTestArgs) -> Result<ClassTestReport, CliError> {
    let first = read_class_file(&a.first)?;
    let second = read_class_file(&a.second)?;
    let c = comparability_test(&first, &second, a.alpha)?;
    Ok(ClassTestReport {
        first: first.label(),
        n_first: first.len(),
        second: second.label(),
        n_second: second.len(),
        statistic: c.statistic,
        p_value: c.p_value,
        method: c.method,
        alpha: c.alpha,
        comparable: c.comparable,
    })
}

fn summarize_cmd(a: &args::SummarizeArgs) -> Result<SummaryReport, CliError> {
    let class = load_class(&a.source)?;
    let summary = summarize(&class);
    let written = match &a.out {
        Some(path) => {
            write(path, &summary.ecdf_csv())?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok(SummaryReport {
        class: class.label(),
        summary,
        written,
    })
}

fn uplift_cmd(a: &args::UpliftArgs) -> Result<UpliftReport, CliError> {
    let class = load_class(&a.source)?;
    let query = UpliftQuery::new(a.risk)?.clamp_nonnegative(a.clamp_nonnegative);
    Ok(UpliftReport {
        class: class.label(),
        uplift: uplift(&class, &query),
    })
}

fn budget_report(class: &ReferenceClass, b: &UpliftedBudget) -> BudgetReport {
    BudgetReport {
        class: class.label(),
        n: class.len(),
        risk: b.risk,
        uplift: b.uplift_fraction,
        base: (&b.base).into(),
        budget: (&b.budget).into(),
        uplift_amount: b.allowance.uplift_amount().into(),
        allowance: b.allowance.allowance_amount().into(),
        warnings: b.warnings.clone(),
    }
}

fn budget(a: &args::ForecastArgs) -> Result<BudgetReport, CliError> {
    let class = load_class(&a.source)?;
    let base = money(&a.base, "--base", &a.unit, Some(class_unit(&class)))?;
    let query = UpliftQuery::new(a.risk)?.clamp_nonnegative(a.clamp_nonnegative);
    let b = forecast_with_uplift(&base, &class, &query)?;
    Ok(budget_report(&class, &b))
}

fn regress_cmd(a: &args::RegressArgs) -> Result<RegressReport, CliError> {
    let variable = match a.variable {
        Variable::TotalCost => OutcomeVariable::TotalCost,
        Variable::DeviationFraction => OutcomeVariable::DeviationFraction,
        Variable::DurationDays => OutcomeVariable::DurationDays,
        Variable::Benefit => OutcomeVariable::Benefit,
    };
    let reliability = reliability(a.rho, a.pairs.as_deref())?;
    let r = regress(
        &ClassMean::new(a.mean, variable),
        &IntuitiveEstimate::new(a.intuitive, variable)?,
        &reliability,
    )?;
    Ok(RegressReport {
        variable: variable.to_string(),
        class_mean: r.class_mean,
        intuitive: r.intuitive,
        reliability,
        corrected: r.corrected,
    })
}

fn diagnose(a: &args::DiagnoseArgs) -> Result<DiagnoseReport, CliError> {
    let thresholds = Thresholds {
        learning: a.learning_threshold,
        alignment: a.alignment_threshold,
    };
    let text = read(&a.profile)?;
    let is_list = text.trim_start().starts_with('[');
    let named: Vec<(String, DiagnosticProfile)> = if is_list {
        archetypes_from_json(&text)?
            .into_iter()
            .map(|a| (a.name, a.profile))
            .collect()
    } else {
        let name = a
            .profile
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "profile".into());
        vec![(name, DiagnosticProfile::from_json(&text)?)]
    };
    Ok(DiagnoseReport {
        thresholds,
        profiles: named
            .into_iter()
            .map(|(name, p)| Diagnosis {
                name,
                learning_score: p.learning_score(),
                alignment_score: p.alignment_score(),
                quadrant: classify(&p, thresholds),
            })
            .collect(),
    })
}

fn funding(path: &Path) -> Result<FindingsReport, CliError> {
    let structure = FundingStructure::from_json(&read(path)?)?;
    let findings = check_funding(&structure);
    Ok(FindingsReport {
        subject: format!("funding structure {}", path.display()),
        all_pass: all_pass(&findings),
        findings,
    })
}

fn risk_register(path: &Path) -> Result<FindingsReport, CliError> {
    let entries = register_from_json(&read(path)?)?;
    let findings = validate_risk_register(&entries);
    Ok(FindingsReport {
        subject: format!("risk register {}", path.display()),
        all_pass: all_pass(&findings),
        findings,
    })
}

fn apportion(a: &args::ApportionArgs) -> Result<ApportionReport, CliError> {
    let amount = money(&a.amount, "--amount", &a.unit, None)?;
    let unit = Some(&amount);
    let event = CostIncreaseEvent {
        cumulative_prior_increases: money(&a.prior, "--prior", &a.unit, unit)?,
        risk_allowance: money(&a.allowance, "--allowance", &a.unit, unit)?,
        amount: amount.clone(),
    };
    let split = apportion_cost_increase(&event)?;
    Ok(ApportionReport {
        amount: (&event.amount).into(),
        prior_increases: (&event.cumulative_prior_increases).into(),
        risk_allowance: (&event.risk_allowance).into(),
        within_allowance: (&split.within_allowance).into(),
        excess: (&split.excess).into(),
        local_share: (&split.local_share).into(),
        funder_share: (&split.funder_share).into(),
        requires_new_approval: split.requires_new_approval,
    })
}

fn load_cashflows(path: &Path) -> Result<Vec<Cashflow>, CliError> {
    let text = read(path)?;
    let parse_err = |e: String| CliError::domain("PARSE", format!("{}: {e}", path.display()));
    match data_format(path, None)? {
        DataFormat::Json => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string())),
        DataFormat::Csv => csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes())
            .deserialize::<Cashflow>()
            .map(|row| row.map_err(|e| parse_err(e.to_string())))
            .collect(),
    }
}

fn appraise(a: &args::AppraiseArgs) -> Result<AppraiseReport, CliError> {
    let cashflows = load_cashflows(&a.cashflows)?;
    let npv = a.rate.map(|r| npv(&cashflows, r)).transpose()?;
    let result = irr(&cashflows)?;
    Ok(AppraiseReport {
        periods: cashflows.len(),
        rate: a.rate,
        npv,
        irr: result.rate,
        roots: result.roots,
        multiple_roots: result.multiple_roots,
        residual: result.residual,
    })
}

fn simulate_cmd(a: &args::SimulateArgs) -> Result<SimulateReport, CliError> {
    let mut config = SimConfig::from_json(&read(&a.config)?)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(trials) = a.trials {
        config.trials = trials;
    }
    if a.no_debias {
        config.debias = false;
    }
    let result = simulate(&config)?;
    let calibration = calibration_report(&result);
    let written = match &a.out {
        Some(path) => {
            write(path, &calibration_csv(&calibration))?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok(SimulateReport {
        n_projects: config.n_projects,
        trials: result.trials,
        seed: config.seed,
        debiased: result.debiased,
        mean_overrun: result.mean_overrun,
        overrun_share: result.overrun_share,
        regression_error: result.regression_error,
        mean_uplift: result
            .uplift_calibration
            .iter()
            .map(|c| c.mean_uplift)
            .collect(),
        calibration,
        written,
    })
}

fn narrative(a: &args::ReportArgs) -> Result<NarrativeReport, CliError> {
    let class = load_class(&a.source)?;
    let base = money(&a.base, "--base", &a.unit, Some(class_unit(&class)))?;
    let summary = summarize(&class);
    let reliability = reliability(a.rho, a.pairs.as_deref())?;
    let corrected = regress(
        &ClassMean::from_summary(&summary).with_class_id(class.label()),
        &IntuitiveEstimate::new(a.intuitive, OutcomeVariable::DeviationFraction)?,
        &reliability,
    )?;
    let factor =
        Decimal::ONE + parse_amount(&corrected.corrected.to_string(), "corrected overrun")?;
    let corrected_forecast = base.with_amount((base.amount() * factor).round_dp(4).normalize())?;

    let mut warnings: Vec<String> = class.warnings().to_vec();
    warnings.extend(reliability.warnings.iter().cloned());
    let mut budgets = Vec::with_capacity(a.risk.len());
    for &risk in &a.risk {
        let query = UpliftQuery::new(risk)?.clamp_nonnegative(a.clamp_nonnegative);
        let b = forecast_with_uplift(&base, &class, &query)?;
        for w in &b.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        budgets.push(BudgetLine {
            risk,
            uplift: b.uplift_fraction,
            budget: (&b.budget).into(),
            allowance: b.allowance.allowance_amount().into(),
        });
    }

    let mut report = NarrativeReport {
        class: class.label(),
        filter: class.filter().clone(),
        n: class.len(),
        mean: summary.mean,
        median: summary.median,
        min: summary.min,
        max: summary.max,
        stdev: summary.stdev,
        base: (&base).into(),
        intuitive: a.intuitive,
        reliability,
        corrected_overrun: corrected.corrected,
        corrected_forecast: (&corrected_forecast).into(),
        budgets,
        warnings,
        written: None,
    };
    if let Some(path) = &a.out {
        write(path, &report.document(Style::plain()))?;
        report.written = Some(path.display().to_string());
    }
    Ok(report)
}
