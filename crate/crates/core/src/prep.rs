//! Affidavit preparation: attribute pruning, conversion of appraisals to
//! constant local currency, area normalization to square meters and
//! classification of declared values against a fiscal reference.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{Attribute, Dataset, TabularError, Value};

pub const LOCAL_CURRENCY: &str = "ARS";
pub const AREA_COLUMN: &str = "superficiem2";
pub const VALUE_COLUMN: &str = "valor_patrim";
pub const DECLARED_COLUMN: &str = "val_decl";
pub const DEFAULT_TOLERANCE: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrepError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("unknown columns: {}", .0.join(", "))]
    UnknownColumns(Vec<String>),
    #[error("no attributes selected")]
    EmptySelection,
    #[error("no exchange rate for {currency} in {year}")]
    MissingRate { currency: String, year: i32 },
    #[error("no price index for {0}")]
    MissingIndex(i32),
    #[error("negative area {0}")]
    NegativeArea(f64),
    #[error("unknown area unit {0:?}")]
    UnknownUnit(String),
    #[error("tolerance must be in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("{table} table, line {line}: {message}")]
    Table {
        table: &'static str,
        line: u64,
        message: String,
    },
    #[error("base year {0} missing from the price index table")]
    MissingBaseYear(i32),
}

pub type Result<T, E = PrepError> = std::result::Result<T, E>;

/// Projection onto `keep`, in that order, preserving row ids.
pub fn select_attributes<S: AsRef<str>>(raw: &Dataset, keep: &[S]) -> Result<Dataset> {
    if keep.is_empty() {
        return Err(PrepError::EmptySelection);
    }
    let unknown: Vec<String> = keep
        .iter()
        .map(AsRef::as_ref)
        .filter(|k| raw.schema().index_of(k).is_none())
        .map(str::to_string)
        .collect();
    if !unknown.is_empty() {
        return Err(PrepError::UnknownColumns(unknown));
    }
    Ok(raw.project(keep)?)
}

fn table_error(table: &'static str, line: u64, message: impl fmt::Display) -> PrepError {
    PrepError::Table {
        table,
        line,
        message: message.to_string(),
    }
}

fn normalize_currency(code: &str) -> String {
    code.trim().to_ascii_uppercase()
}

/// Local currency units per unit of foreign currency, by year.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FxTable {
    rates: BTreeMap<(String, i32), f64>,
}

#[derive(Deserialize)]
struct FxRecord {
    currency: String,
    year: i32,
    rate: f64,
}

impl FxTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, currency: &str, year: i32, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(table_error(
                "fx",
                0,
                format!("rate must be positive, got {rate}"),
            ));
        }
        self.rates
            .insert((normalize_currency(currency), year), rate);
        Ok(())
    }

    /// Reads a `currency,year,rate` CSV.
    pub fn from_csv<R: Read>(source: R) -> Result<Self> {
        let mut table = Self::new();
        let mut reader = csv::Reader::from_reader(source);
        for (i, record) in reader.deserialize::<FxRecord>().enumerate() {
            let line = i as u64 + 2;
            let r = record.map_err(|e| table_error("fx", line, e))?;
            if !(r.rate.is_finite() && r.rate > 0.0) {
                return Err(table_error(
                    "fx",
                    line,
                    format!("rate must be positive, got {}", r.rate),
                ));
            }
            let key = (normalize_currency(&r.currency), r.year);
            if table.rates.insert(key, r.rate).is_some() {
                return Err(table_error(
                    "fx",
                    line,
                    format!("duplicate entry for {} {}", r.currency, r.year),
                ));
            }
        }
        Ok(table)
    }

    /// Rate for `currency` in `year`; the local currency is always 1.
    pub fn rate(&self, currency: &str, year: i32) -> Option<f64> {
        let code = normalize_currency(currency);
        if code == LOCAL_CURRENCY {
            return Some(1.0);
        }
        self.rates.get(&(code, year)).copied()
    }
}

/// Consumer price index levels by year, with the base year results are
/// expressed in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpiTable {
    index: BTreeMap<i32, f64>,
    base_year: i32,
}

#[derive(Deserialize)]
struct CpiRecord {
    year: i32,
    index: f64,
}

impl CpiTable {
    pub fn new(index: BTreeMap<i32, f64>, base_year: i32) -> Result<Self> {
        if let Some((y, v)) = index.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(table_error(
                "cpi",
                0,
                format!("index for {y} must be positive, got {v}"),
            ));
        }
        if !index.contains_key(&base_year) {
            return Err(PrepError::MissingBaseYear(base_year));
        }
        Ok(Self { index, base_year })
    }

    /// Reads a `year,index` CSV.
    pub fn from_csv<R: Read>(source: R, base_year: i32) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(source);
        for (i, record) in reader.deserialize::<CpiRecord>().enumerate() {
            let line = i as u64 + 2;
            let r = record.map_err(|e| table_error("cpi", line, e))?;
            if !(r.index.is_finite() && r.index > 0.0) {
                return Err(table_error(
                    "cpi",
                    line,
                    format!("index must be positive, got {}", r.index),
                ));
            }
            if index.insert(r.year, r.index).is_some() {
                return Err(table_error(
                    "cpi",
                    line,
                    format!("duplicate year {}", r.year),
                ));
            }
        }
        Self::new(index, base_year)
    }

    pub fn base_year(&self) -> i32 {
        self.base_year
    }

    pub fn index(&self, year: i32) -> Option<f64> {
        self.index.get(&year).copied()
    }
}

/// `amount × fx(currency, year) × cpi(base) / cpi(year)`.
pub fn convert_valuation(
    amount: f64,
    currency: &str,
    year: i32,
    fx: &FxTable,
    cpi: &CpiTable,
) -> Result<f64> {
    let rate = fx
        .rate(currency, year)
        .ok_or_else(|| PrepError::MissingRate {
            currency: normalize_currency(currency),
            year,
        })?;
    let at_year = cpi.index(year).ok_or(PrepError::MissingIndex(year))?;
    let at_base = cpi
        .index(cpi.base_year)
        .ok_or(PrepError::MissingBaseYear(cpi.base_year))?;
    Ok(amount * rate * (at_base / at_year))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaUnit {
    M2,
    Ha,
    Km2,
    Ft2,
}

impl AreaUnit {
    pub fn square_meters(self) -> f64 {
        match self {
            AreaUnit::M2 => 1.0,
            AreaUnit::Ha => 10_000.0,
            AreaUnit::Km2 => 1_000_000.0,
            AreaUnit::Ft2 => 0.09290304,
        }
    }
}

impl FromStr for AreaUnit {
    type Err = PrepError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m2" => Ok(AreaUnit::M2),
            "ha" => Ok(AreaUnit::Ha),
            "km2" => Ok(AreaUnit::Km2),
            "ft2" => Ok(AreaUnit::Ft2),
            _ => Err(PrepError::UnknownUnit(s.to_string())),
        }
    }
}

pub fn homogenize_area(value: f64, unit: AreaUnit) -> Result<f64> {
    if value < 0.0 {
        return Err(PrepError::NegativeArea(value));
    }
    Ok(value * unit.square_meters())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeclaredValue {
    Fiscal,
    Subfiscal,
    Market,
    NotDeclared,
}

impl DeclaredValue {
    pub fn label(self) -> &'static str {
        match self {
            DeclaredValue::Fiscal => "Fiscal",
            DeclaredValue::Subfiscal => "Subfiscal",
            DeclaredValue::Market => "Market",
            DeclaredValue::NotDeclared => "NotDeclared",
        }
    }
}

impl fmt::Display for DeclaredValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A declared-value label and, when the inputs were doubtful, why.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: DeclaredValue,
    pub warning: Option<String>,
}

/// Classifies a declared amount by its ratio to a fiscal reference.
///
/// Missing or zero declarations are `NotDeclared`. A missing reference also
/// gives `NotDeclared`, and a zero reference under a positive declaration
/// gives `Market`, both with a warning. Otherwise ratios below
/// `1 - tolerance` are `Subfiscal`, above `1 + tolerance` `Market`, and
/// `Fiscal` in between.
pub fn classify_declared_value(
    declared: Option<f64>,
    reference: Option<f64>,
    tolerance: f64,
) -> Result<Classification> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(PrepError::InvalidTolerance(tolerance));
    }
    let plain = |label| {
        Ok(Classification {
            label,
            warning: None,
        })
    };
    let declared = match declared {
        None => return plain(DeclaredValue::NotDeclared),
        Some(0.0) => return plain(DeclaredValue::NotDeclared),
        Some(d) => d,
    };
    let reference = match reference {
        None => {
            return Ok(Classification {
                label: DeclaredValue::NotDeclared,
                warning: Some("declared value without fiscal reference".to_string()),
            })
        }
        Some(r) => r,
    };
    if reference == 0.0 {
        return Ok(Classification {
            label: DeclaredValue::Market,
            warning: Some("fiscal reference is zero".to_string()),
        });
    }
    let r = declared / reference;
    if r < 1.0 - tolerance {
        plain(DeclaredValue::Subfiscal)
    } else if r > 1.0 + tolerance {
        plain(DeclaredValue::Market)
    } else {
        plain(DeclaredValue::Fiscal)
    }
}

/// Which raw columns play which role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnRoles {
    pub currency: String,
    pub year: String,
    /// Declared amount, in the row's currency.
    pub value: String,
    pub area: String,
    /// Per-row area unit; when absent every area is in `default_area_unit`.
    #[serde(default)]
    pub area_unit: Option<String>,
    /// Fiscal valuation, in the same currency as `value`.
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepConfig {
    /// Attributes to keep, in output order; all of them when absent.
    #[serde(default)]
    pub keep: Option<Vec<String>>,
    pub columns: ColumnRoles,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_area_unit")]
    pub default_area_unit: AreaUnit,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_area_unit() -> AreaUnit {
    AreaUnit::M2
}

impl PrepConfig {
    pub fn new(columns: ColumnRoles) -> Self {
        Self {
            keep: None,
            columns,
            tolerance: DEFAULT_TOLERANCE,
            default_area_unit: AreaUnit::M2,
        }
    }
}

/// One preparation log line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepWarning {
    pub row_id: usize,
    pub column: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepSummary {
    pub rows: usize,
    pub values_converted: usize,
    pub areas_converted: usize,
    pub declared: BTreeMap<String, usize>,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub data: Dataset,
    pub summary: PrepSummary,
    pub log: Vec<PrepWarning>,
}

fn number_in(v: &Value) -> Option<std::result::Result<f64, String>> {
    match v {
        Value::Missing => None,
        Value::Number(x) => Some(Ok(*x)),
        Value::Label(s) => Some(
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("{s:?} is not a number")),
        ),
    }
}

fn year_in(v: &Value) -> Option<std::result::Result<i32, String>> {
    number_in(v).map(|r| {
        r.and_then(|x| {
            if x.fract() == 0.0 && x.abs() < 1e6 {
                Ok(x as i32)
            } else {
                Err(format!("{x} is not a year"))
            }
        })
    })
}

/// Runs the whole preparation. Configuration is checked against the raw
/// schema before anything is computed. Rows are never dropped: a value that
/// cannot be derived becomes missing and is logged.
pub fn prepare(raw: &Dataset, cfg: &PrepConfig, fx: &FxTable, cpi: &CpiTable) -> Result<Prepared> {
    if !(cfg.tolerance > 0.0 && cfg.tolerance < 1.0) {
        return Err(PrepError::InvalidTolerance(cfg.tolerance));
    }
    let roles = &cfg.columns;
    let mut referenced: Vec<&str> = vec![
        &roles.currency,
        &roles.year,
        &roles.value,
        &roles.area,
        &roles.reference,
    ];
    if let Some(u) = &roles.area_unit {
        referenced.push(u);
    }
    if let Some(keep) = &cfg.keep {
        referenced.extend(keep.iter().map(String::as_str));
    }
    let mut unknown: Vec<String> = Vec::new();
    for name in referenced {
        if raw.schema().index_of(name).is_none() && !unknown.iter().any(|u| u == name) {
            unknown.push(name.to_string());
        }
    }
    if !unknown.is_empty() {
        return Err(PrepError::UnknownColumns(unknown));
    }
    let col = |name: &str| raw.schema().index_of(name).expect("checked above");
    let (c_cur, c_year, c_val, c_area, c_ref) = (
        col(&roles.currency),
        col(&roles.year),
        col(&roles.value),
        col(&roles.area),
        col(&roles.reference),
    );
    let c_unit = roles.area_unit.as_deref().map(col);

    let mut log = Vec::new();
    let mut warn = |row_id: usize, column: &str, kind: &str, message: String| {
        log.push(PrepWarning {
            row_id,
            column: column.to_string(),
            kind: kind.to_string(),
            message,
        });
    };
    let n = raw.n_rows();
    let mut areas = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut declared = Vec::with_capacity(n);
    let mut summary = PrepSummary {
        rows: n,
        values_converted: 0,
        areas_converted: 0,
        declared: BTreeMap::new(),
        warnings: 0,
    };

    for i in 0..n {
        let id = raw.row_id(i);
        let row = raw.row(i);

        let area = match number_in(&row[c_area]) {
            None => None,
            Some(Err(e)) => {
                warn(id, AREA_COLUMN, "unparseable_area", e);
                None
            }
            Some(Ok(a)) => {
                let unit = match c_unit.map(|u| &row[u]) {
                    None => Ok(cfg.default_area_unit),
                    Some(Value::Missing) => Err("area unit is missing".to_string()),
                    Some(v) => v.to_string().parse::<AreaUnit>().map_err(|e| e.to_string()),
                };
                match unit.and_then(|u| homogenize_area(a, u).map_err(|e| e.to_string())) {
                    Ok(m2) => {
                        summary.areas_converted += 1;
                        Some(m2)
                    }
                    Err(e) => {
                        warn(id, AREA_COLUMN, "area_not_converted", e);
                        None
                    }
                }
            }
        };
        areas.push(area.map_or(Value::Missing, Value::Number));

        let amount = match number_in(&row[c_val]) {
            None => None,
            Some(Err(e)) => {
                warn(id, VALUE_COLUMN, "unparseable_value", e);
                None
            }
            Some(Ok(x)) => Some(x),
        };
        let value = amount.and_then(|x| {
            if x < 0.0 {
                warn(
                    id,
                    VALUE_COLUMN,
                    "negative_value",
                    format!("amount {x} is negative"),
                );
                return None;
            }
            let currency = match &row[c_cur] {
                Value::Missing => {
                    warn(
                        id,
                        VALUE_COLUMN,
                        "missing_currency",
                        "currency is missing".into(),
                    );
                    return None;
                }
                v => v.to_string(),
            };
            let year = match year_in(&row[c_year]) {
                None => {
                    warn(id, VALUE_COLUMN, "missing_year", "year is missing".into());
                    return None;
                }
                Some(Err(e)) => {
                    warn(id, VALUE_COLUMN, "unparseable_year", e);
                    return None;
                }
                Some(Ok(y)) => y,
            };
            match convert_valuation(x, &currency, year, fx, cpi) {
                Ok(v) => {
                    summary.values_converted += 1;
                    Some(v)
                }
                Err(e) => {
                    warn(id, VALUE_COLUMN, "value_not_converted", e.to_string());
                    None
                }
            }
        });
        values.push(value.map_or(Value::Missing, Value::Number));

        let reference = match number_in(&row[c_ref]) {
            None => None,
            Some(Ok(r)) => Some(r),
            Some(Err(e)) => {
                warn(id, DECLARED_COLUMN, "unparseable_reference", e);
                None
            }
        };
        let class = classify_declared_value(amount, reference, cfg.tolerance)?;
        if let Some(w) = class.warning {
            warn(id, DECLARED_COLUMN, "declared_value", w);
        }
        *summary
            .declared
            .entry(class.label.label().to_string())
            .or_insert(0) += 1;
        declared.push(Value::Label(class.label.label().to_string()));
    }

    let mut data = match &cfg.keep {
        Some(keep) => select_attributes(raw, keep)?,
        None => raw.clone(),
    };
    data = data.with_column(Attribute::numeric(AREA_COLUMN), areas)?;
    data = data.with_column(Attribute::numeric(VALUE_COLUMN), values)?;
    data = data.with_column(Attribute::nominal(DECLARED_COLUMN), declared)?;
    summary.warnings = log.len();
    Ok(Prepared { data, summary, log })
}
