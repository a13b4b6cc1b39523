//! Loading, validating and saving project-record datasets.
//!
//! CSV layout (UTF-8, first non-comment row is the header):
//!
//! ```text
//! # schema_version=1
//! id,project_type,stage,year,currency,price_basis,base_year,forecast_cost,actual_cost,
//! benefit_unit,forecast_benefit,actual_benefit,forecast_duration_days,actual_duration_days,regime_tags
//! ```
//!
//! Missing values are empty cells, never `0`. `regime_tags` is a
//! semicolon-separated list. Columns outside the fixed set are carried through
//! as string attributes; an empty cell in such a column means "absent".
//!
//! JSON uses the same field names, either as a bare array of records or as
//! `{"schema_version": N, "records": [...]}`. Absent optional fields are
//! omitted (or `null`).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rust_decimal::Decimal;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{
    deviation, Currency, DeviationMetric, FieldIssue, Money, PriceBasis, ProjectRecord, Stage,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed column order used when writing.
pub const COLUMNS: [&str; 15] = [
    "id",
    "project_type",
    "stage",
    "year",
    "currency",
    "price_basis",
    "base_year",
    "forecast_cost",
    "actual_cost",
    "benefit_unit",
    "forecast_benefit",
    "actual_benefit",
    "forecast_duration_days",
    "actual_duration_days",
    "regime_tags",
];

const REQUIRED_COLUMNS: [&str; 7] = [
    "id",
    "project_type",
    "stage",
    "year",
    "currency",
    "price_basis",
    "forecast_cost",
];

/// Deviations above this are suspicious but legitimate (warning, not error).
pub const SUSPICIOUS_DEVIATION: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(DataFormat::Csv),
            "json" => Some(DataFormat::Json),
            _ => None,
        }
    }
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "json" => Ok(DataFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub record_id: Option<String>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.record_id, &self.field) {
            (Some(id), Some(field)) => write!(f, "{id}.{field}: {}", self.message),
            (Some(id), None) => write!(f, "{id}: {}", self.message),
            (None, Some(field)) => write!(f, "{field}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

/// Outcome of validating a dataset. The dataset is accepted iff `errors` is
/// empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, record_id: Option<&str>, field: Option<&str>, message: impl Into<String>) {
        self.errors.push(Issue {
            record_id: record_id.map(str::to_string),
            field: field.map(str::to_string),
            message: message.into(),
        });
    }

    fn warn(&mut self, record_id: Option<&str>, field: Option<&str>, message: impl Into<String>) {
        self.warnings.push(Issue {
            record_id: record_id.map(str::to_string),
            field: field.map(str::to_string),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("dataset rejected with {} error(s)", .0.errors.len())]
    Invalid(ValidationReport),
}

/// A validated collection of records. Every record satisfies the record
/// invariants and all ids are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<ProjectRecord>,
    source: String,
    schema_version: u32,
}

impl Dataset {
    /// Checks dataset-level invariants (unique ids) over already-valid records.
    pub fn new(
        records: Vec<ProjectRecord>,
        source: impl Into<String>,
        schema_version: u32,
    ) -> Result<(Dataset, ValidationReport), ValidationReport> {
        let mut report = ValidationReport::default();
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id()) {
                report.error(Some(r.id()), Some("id"), "duplicate id");
            }
        }
        dataset_warnings(&records, &mut report);
        if !report.is_accepted() {
            return Err(report);
        }
        Ok((
            Dataset {
                records,
                source: source.into(),
                schema_version,
            },
            report,
        ))
    }

    pub fn records(&self) -> &[ProjectRecord] {
        &self.records
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn schema_version(&self) -> u32 {
        self.schema_version
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same records and schema version, ignoring where the data came from.
    pub fn same_content(&self, other: &Dataset) -> bool {
        self.records == other.records && self.schema_version == other.schema_version
    }
}

fn dataset_warnings(records: &[ProjectRecord], report: &mut ValidationReport) {
    if records.is_empty() {
        report.warn(None, None, "empty dataset");
    }
    for r in records {
        for metric in [
            DeviationMetric::CostOverrun,
            DeviationMetric::BenefitShortfall,
            DeviationMetric::ScheduleSlip,
        ] {
            if let Ok(d) = deviation(r, metric) {
                if d > SUSPICIOUS_DEVIATION {
                    report.warn(
                        Some(r.id()),
                        None,
                        format!("{metric} of {d:.3} exceeds {SUSPICIOUS_DEVIATION}x forecast"),
                    );
                }
            }
        }
    }
    let units: BTreeSet<String> = records
        .iter()
        .map(|r| r.forecast_cost().unit_label())
        .collect();
    if units.len() > 1 {
        let list: Vec<_> = units.into_iter().collect();
        report.warn(
            None,
            Some("currency"),
            format!(
                "records use several currency/price bases: {}",
                list.join(", ")
            ),
        );
    }
}

/// Result of a successful load: the dataset plus any warnings.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub report: ValidationReport,
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Loaded, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, format, &path.display().to_string())
}

/// Parses and validates dataset text. Pure function of its inputs.
pub fn parse_dataset(text: &str, format: DataFormat, source: &str) -> Result<Loaded, IngestError> {
    let (rows, schema_version) = match format {
        DataFormat::Csv => parse_csv_rows(text)?,
        DataFormat::Json => parse_json_rows(text)?,
    };
    let mut report = ValidationReport::default();
    let mut records = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        match record_from_row(row) {
            Ok(r) => records.push(r),
            Err(issues) => {
                let id = row
                    .get("id")
                    .filter(|s| !s.trim().is_empty())
                    .cloned()
                    .unwrap_or_else(|| format!("row {}", index + 1));
                for issue in issues {
                    report.error(Some(&id), Some(&issue.field), issue.message);
                }
            }
        }
    }
    if !report.is_accepted() {
        // Still surface duplicate ids among the rows that did parse.
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id().to_string()) {
                report.error(Some(r.id()), Some("id"), "duplicate id");
            }
        }
        return Err(IngestError::Invalid(report));
    }
    match Dataset::new(records, source, schema_version) {
        Ok((dataset, dataset_report)) => {
            report.warnings.extend(dataset_report.warnings);
            Ok(Loaded { dataset, report })
        }
        Err(bad) => Err(IngestError::Invalid(bad)),
    }
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<(), IngestError> {
    let text = render_dataset(dataset, format)?;
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Serializes a dataset to the text `save_dataset` would write.
pub fn render_dataset(dataset: &Dataset, format: DataFormat) -> Result<String, IngestError> {
    match format {
        DataFormat::Csv => render_csv(dataset),
        DataFormat::Json => Ok(render_json(dataset)),
    }
}

type Row = BTreeMap<String, String>;

fn parse_csv_rows(text: &str) -> Result<(Vec<Row>, u32), IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut schema_version = SCHEMA_VERSION;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("schema_version=") {
                schema_version = v.trim().parse().map_err(|_| {
                    IngestError::Parse(format!("bad schema_version comment `{trimmed}`"))
                })?;
            }
            body_start += line.len();
        } else if trimmed.is_empty() {
            body_start += line.len();
        } else {
            break;
        }
    }
    let body = &text[body_start..];
    if body.trim().is_empty() {
        return Err(IngestError::Parse("missing CSV header row".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Parse(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    check_header(&headers)?;
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IngestError::Parse(e.to_string()))?;
        let row: Row = headers
            .iter()
            .zip(record.iter())
            .filter(|(_, v)| !v.trim().is_empty())
            .map(|(h, v)| (h.clone(), v.to_string()))
            .collect();
        rows.push(row);
    }
    Ok((rows, schema_version))
}

fn check_header(headers: &[String]) -> Result<(), IngestError> {
    let mut seen = HashSet::new();
    for h in headers {
        if h.is_empty() {
            return Err(IngestError::Parse("empty column name in header".into()));
        }
        if !seen.insert(h.as_str()) {
            return Err(IngestError::Parse(format!("duplicate column `{h}`")));
        }
    }
    for required in REQUIRED_COLUMNS {
        if !seen.contains(required) {
            return Err(IngestError::Parse(format!(
                "missing required column `{required}`"
            )));
        }
    }
    Ok(())
}

fn parse_json_rows(text: &str) -> Result<(Vec<Row>, u32), IngestError> {
    let value: Value = serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
    let (items, schema_version) = match value {
        Value::Array(items) => (items, SCHEMA_VERSION),
        Value::Object(mut obj) => {
            let version = match obj.remove("schema_version") {
                None => SCHEMA_VERSION,
                Some(v) => v
                    .as_u64()
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| {
                        IngestError::Parse("schema_version must be an integer".into())
                    })?,
            };
            match obj.remove("records") {
                Some(Value::Array(items)) => (items, version),
                _ => {
                    return Err(IngestError::Parse(
                        "expected a `records` array in the dataset object".into(),
                    ))
                }
            }
        }
        _ => {
            return Err(IngestError::Parse(
                "expected an array of records or a dataset object".into(),
            ))
        }
    };
    let mut rows = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let Value::Object(fields) = item else {
            return Err(IngestError::Parse(format!(
                "record {} is not an object",
                i + 1
            )));
        };
        let mut row = Row::new();
        for (key, value) in fields {
            let cell = match value {
                Value::Null => continue,
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Array(items) if key == "regime_tags" => {
                    let mut tags = Vec::with_capacity(items.len());
                    for t in items {
                        match t {
                            Value::String(s) => tags.push(s),
                            other => {
                                return Err(IngestError::Parse(format!(
                                    "record {}: regime tag {other} is not a string",
                                    i + 1
                                )))
                            }
                        }
                    }
                    tags.join(";")
                }
                other => {
                    return Err(IngestError::Parse(format!(
                        "record {}: field `{key}` has unsupported value {other}",
                        i + 1
                    )))
                }
            };
            if !cell.trim().is_empty() {
                row.insert(key, cell);
            }
        }
        rows.push(row);
    }
    Ok((rows, schema_version))
}

fn record_from_row(row: &Row) -> Result<ProjectRecord, Vec<FieldIssue>> {
    let mut issues = Vec::new();
    let mut issue = |field: &str, message: String| {
        issues.push(FieldIssue {
            field: field.to_string(),
            message,
        })
    };
    let cell = |name: &str| row.get(name).map(|s| s.trim()).filter(|s| !s.is_empty());

    fn parse<T: FromStr>(
        value: Option<&str>,
        field: &str,
        what: &str,
        issue: &mut impl FnMut(&str, String),
    ) -> Option<T> {
        let v = value?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                issue(field, format!("`{v}` is not a valid {what}"));
                None
            }
        }
    }

    let id = cell("id").unwrap_or_default().to_string();
    if id.is_empty() {
        issue("id", "id is required".into());
    }
    let project_type = cell("project_type").unwrap_or_default().to_string();
    let stage = match cell("stage") {
        None => {
            issue("stage", "stage is required".into());
            None
        }
        Some(s) => match Stage::from_str(s) {
            Ok(st) => Some(st),
            Err(e) => {
                issue("stage", e.to_string());
                None
            }
        },
    };
    let year: Option<i32> = parse(cell("year"), "year", "year", &mut issue);
    if cell("year").is_none() {
        issue("year", "year is required".into());
    }
    let base_year: Option<i32> = parse(cell("base_year"), "base_year", "year", &mut issue);
    let currency = match cell("currency").map(Currency::new) {
        None => {
            issue("currency", "currency is required".into());
            None
        }
        Some(Err(e)) => {
            issue("currency", e.to_string());
            None
        }
        Some(Ok(c)) => Some(c),
    };
    let basis = match cell("price_basis") {
        None => {
            issue("price_basis", "price_basis is required".into());
            None
        }
        Some(tag) => match PriceBasis::from_parts(tag, base_year) {
            Ok(b) => Some(b),
            Err(e) => {
                issue("price_basis", e.to_string());
                None
            }
        },
    };
    let money = |field: &str, issue: &mut dyn FnMut(&str, String)| -> Option<Money> {
        let raw = cell(field)?;
        let amount = match Decimal::from_str_exact(raw).or_else(|_| Decimal::from_scientific(raw)) {
            Ok(a) => a,
            Err(_) => {
                issue(field, format!("`{raw}` is not a valid amount"));
                return None;
            }
        };
        match Money::new(amount, currency.clone()?, basis?) {
            Ok(m) => Some(m),
            Err(e) => {
                issue(field, e.to_string());
                None
            }
        }
    };
    let forecast_cost = money("forecast_cost", &mut issue);
    if cell("forecast_cost").is_none() {
        issue("forecast_cost", "forecast_cost is required".into());
    }
    let actual_cost = money("actual_cost", &mut issue);
    let forecast_benefit: Option<Decimal> = parse(
        cell("forecast_benefit"),
        "forecast_benefit",
        "number",
        &mut issue,
    );
    let actual_benefit: Option<Decimal> = parse(
        cell("actual_benefit"),
        "actual_benefit",
        "number",
        &mut issue,
    );
    let forecast_days: Option<u32> = parse(
        cell("forecast_duration_days"),
        "forecast_duration_days",
        "day count",
        &mut issue,
    );
    let actual_days: Option<u32> = parse(
        cell("actual_duration_days"),
        "actual_duration_days",
        "day count",
        &mut issue,
    );
    let tags: Vec<String> = cell("regime_tags")
        .map(|t| {
            t.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();

    let (Some(stage), Some(year), Some(forecast_cost)) = (stage, year, forecast_cost) else {
        return Err(issues);
    };
    if !issues.is_empty() {
        return Err(issues);
    }
    let mut builder = ProjectRecord::builder(&id, &project_type, forecast_cost)
        .stage(stage)
        .year(year)
        .actual_cost(actual_cost)
        .benefit(
            cell("benefit_unit").map(str::to_string),
            forecast_benefit,
            actual_benefit,
        )
        .durations(forecast_days, actual_days)
        .regime_tags(tags);
    for (key, value) in row {
        let (key, value) = (key.trim(), value.trim());
        if !COLUMNS.contains(&key) && !value.is_empty() {
            builder = builder.attribute(key, value);
        }
    }
    builder.build()
}

fn row_from_record(r: &ProjectRecord) -> Vec<(&'static str, Option<String>)> {
    let fc = r.forecast_cost();
    vec![
        ("id", Some(r.id().to_string())),
        ("project_type", Some(r.project_type().to_string())),
        ("stage", Some(r.stage().as_str().to_string())),
        ("year", Some(r.year().to_string())),
        ("currency", Some(fc.currency().to_string())),
        ("price_basis", Some(fc.basis().tag().to_string())),
        ("base_year", fc.basis().base_year().map(|y| y.to_string())),
        ("forecast_cost", Some(fc.amount().to_string())),
        (
            "actual_cost",
            r.actual_cost().map(|m| m.amount().to_string()),
        ),
        ("benefit_unit", r.benefit_unit().map(str::to_string)),
        (
            "forecast_benefit",
            r.forecast_benefit().map(|d| d.to_string()),
        ),
        ("actual_benefit", r.actual_benefit().map(|d| d.to_string())),
        (
            "forecast_duration_days",
            r.forecast_duration_days().map(|d| d.to_string()),
        ),
        (
            "actual_duration_days",
            r.actual_duration_days().map(|d| d.to_string()),
        ),
        (
            "regime_tags",
            (!r.regime_tags().is_empty()).then(|| {
                r.regime_tags()
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(";")
            }),
        ),
    ]
}

fn render_csv(dataset: &Dataset) -> Result<String, IngestError> {
    let extra: BTreeSet<&str> = dataset
        .records()
        .iter()
        .flat_map(|r| r.attributes().keys().map(String::as_str))
        .collect();
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| IngestError::Parse(e.to_string());
    writer
        .write_record(COLUMNS.iter().copied().chain(extra.iter().copied()))
        .map_err(csv_err)?;
    for r in dataset.records() {
        let fixed = row_from_record(r)
            .into_iter()
            .map(|(_, v)| v.unwrap_or_default());
        let attrs = extra
            .iter()
            .map(|k| r.attributes().get(*k).cloned().unwrap_or_default());
        writer
            .write_record(fixed.chain(attrs).collect::<Vec<_>>())
            .map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| IngestError::Parse(e.to_string()))?;
    let body = String::from_utf8(bytes).map_err(|e| IngestError::Parse(e.to_string()))?;
    Ok(format!(
        "# schema_version={}\n{body}",
        dataset.schema_version()
    ))
}

const NUMERIC_COLUMNS: [&str; 8] = [
    "year",
    "base_year",
    "forecast_cost",
    "actual_cost",
    "forecast_benefit",
    "actual_benefit",
    "forecast_duration_days",
    "actual_duration_days",
];

fn json_number(text: &str) -> Value {
    // Decimal text is always a valid JSON number; keep its exact digits.
    serde_json::from_str::<serde_json::Number>(text)
        .map(Value::Number)
        .unwrap_or_else(|_| Value::String(text.to_string()))
}

fn render_json(dataset: &Dataset) -> String {
    let records: Vec<Value> = dataset
        .records()
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            for (key, value) in row_from_record(r) {
                let Some(value) = value else { continue };
                let v = if key == "regime_tags" {
                    Value::Array(
                        r.regime_tags()
                            .iter()
                            .map(|t| Value::String(t.clone()))
                            .collect(),
                    )
                } else if NUMERIC_COLUMNS.contains(&key) {
                    json_number(&value)
                } else {
                    Value::String(value)
                };
                obj.insert(key.to_string(), v);
            }
            for (k, v) in r.attributes() {
                obj.insert(k.clone(), Value::String(v.clone()));
            }
            Value::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert(
        "schema_version".into(),
        Value::Number(dataset.schema_version().into()),
    );
    doc.insert("records".into(), Value::Array(records));
    let mut text =
        serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize");
    text.push('\n');
    text
}
