//! Dataset model for mixed numeric/nominal tables.
//!
//! A [`Dataset`] is an immutable table whose rows carry stable integer ids.
//! Every transformation here returns a new dataset; row ids survive
//! projection, filtering and column replacement so detector output can
//! always be traced back to the source file.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Missing-value sentinels used when none are configured.
pub const DEFAULT_MISSING_SENTINELS: [&str; 3] = ["", "no data", "sin datos"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TabularError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute names must be nonempty")]
    EmptyAttributeName,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{0}` is not numeric")]
    NotNumeric(String),
    #[error("row {row} has {found} values, schema has {expected}")]
    RowArity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: value for `{attribute}` does not match its kind")]
    KindMismatch { row: usize, attribute: String },
    #[error("duplicate row id {0}")]
    DuplicateRowId(usize),
    #[error("row id list has {found} entries for {expected} rows")]
    RowIdCount { expected: usize, found: usize },
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
    #[error("attribute `{0}` has no observed values")]
    AllMissing(String),
    #[error("row does not conform to the schema: {0}")]
    SchemaMismatch(String),
    #[error("csv output: {0}")]
    Write(String),
}

pub type Result<T, E = TabularError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Nominal,
}

/// One cell of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Label(String),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            _ => None,
        }
    }

    fn conforms_to(&self, kind: AttributeKind) -> bool {
        match (self, kind) {
            (Value::Missing, _) => true,
            (Value::Number(x), AttributeKind::Numeric) => x.is_finite(),
            (Value::Label(_), AttributeKind::Nominal) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Label(s) => f.write_str(s),
            Value::Missing => Ok(()),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Number(x) => serializer.serialize_f64(*x),
            Value::Label(s) => serializer.serialize_str(s),
            Value::Missing => serializer.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn new(name: impl Into<String>, kind: AttributeKind) -> Self {
        Attribute {
            name: name.into(),
            kind,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Self::new(name, AttributeKind::Numeric)
    }

    pub fn nominal(name: impl Into<String>) -> Self {
        Self::new(name, AttributeKind::Nominal)
    }
}

/// Ordered attribute list with unique, nonempty names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if attr.name.is_empty() {
                return Err(TabularError::EmptyAttributeName);
            }
            if !seen.insert(attr.name.as_str()) {
                return Err(TabularError::DuplicateAttribute(attr.name.clone()));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Like [`Schema::index_of`] but reports unknown names as errors.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| TabularError::UnknownAttribute(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

/// An immutable table of rows conforming to a [`Schema`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Vec<Value>>,
    row_ids: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset, checking arity, value kinds and row-id uniqueness.
    pub fn new(schema: Schema, rows: Vec<Vec<Value>>, row_ids: Vec<usize>) -> Result<Self> {
        if rows.len() != row_ids.len() {
            return Err(TabularError::RowIdCount {
                expected: rows.len(),
                found: row_ids.len(),
            });
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(TabularError::RowArity {
                    row: r,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (value, attr) in row.iter().zip(schema.attributes()) {
                if !value.conforms_to(attr.kind) {
                    return Err(TabularError::KindMismatch {
                        row: r,
                        attribute: attr.name.clone(),
                    });
                }
            }
        }
        let mut seen = HashSet::with_capacity(row_ids.len());
        for &id in &row_ids {
            if !seen.insert(id) {
                return Err(TabularError::DuplicateRowId(id));
            }
        }
        Ok(Dataset {
            schema,
            rows,
            row_ids,
        })
    }

    /// Builds a dataset with row ids `0..n`.
    pub fn from_rows(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self> {
        let ids = (0..rows.len()).collect();
        Self::new(schema, rows, ids)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[Value] {
        &self.rows[index]
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn row_id(&self, index: usize) -> usize {
        self.row_ids[index]
    }

    /// Row position for a row id, if present.
    pub fn position_of(&self, row_id: usize) -> Option<usize> {
        self.row_ids.iter().position(|&id| id == row_id)
    }

    pub fn cell(&self, row: usize, attr: usize) -> &Value {
        &self.rows[row][attr]
    }

    pub fn column(&self, attr: usize) -> impl Iterator<Item = &Value> + '_ {
        self.rows.iter().map(move |r| &r[attr])
    }

    /// Numeric view of a column; labels and missing cells map to `None`.
    pub fn numeric_column(&self, attr: usize) -> Vec<Option<f64>> {
        self.column(attr).map(Value::as_number).collect()
    }

    /// Projection onto `names`, in the given order, keeping row ids.
    pub fn project<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| self.schema.require(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let schema = Schema::new(
            idx.iter()
                .map(|&i| self.schema.attribute(i).clone())
                .collect(),
        )?;
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect();
        Ok(Dataset {
            schema,
            rows,
            row_ids: self.row_ids.clone(),
        })
    }

    /// Keeps the rows at the given positions, in the given order.
    pub fn select_rows(&self, positions: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: positions.iter().map(|&p| self.rows[p].clone()).collect(),
            row_ids: positions.iter().map(|&p| self.row_ids[p]).collect(),
        }
    }

    pub fn filter_rows<F>(&self, mut keep: F) -> Dataset
    where
        F: FnMut(&[Value]) -> bool,
    {
        let positions: Vec<usize> = (0..self.n_rows())
            .filter(|&i| keep(&self.rows[i]))
            .collect();
        self.select_rows(&positions)
    }

    /// Replaces the column named `attribute.name` in place, or appends it
    /// when the name is new.
    pub fn with_column(&self, attribute: Attribute, values: Vec<Value>) -> Result<Dataset> {
        if values.len() != self.n_rows() {
            return Err(TabularError::RowArity {
                row: 0,
                expected: self.n_rows(),
                found: values.len(),
            });
        }
        let mut attrs = self.schema.attributes.clone();
        let mut rows = self.rows.clone();
        match self.schema.index_of(&attribute.name) {
            Some(i) => {
                attrs[i] = attribute;
                for (row, v) in rows.iter_mut().zip(values) {
                    row[i] = v;
                }
            }
            None => {
                attrs.push(attribute);
                for (row, v) in rows.iter_mut().zip(values) {
                    row.push(v);
                }
            }
        }
        Dataset::new(Schema::new(attrs)?, rows, self.row_ids.clone())
    }

    pub fn without_column(&self, name: &str) -> Result<Dataset> {
        let drop = self.schema.require(name)?;
        let keep: Vec<&str> = self
            .schema
            .names()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, n)| n)
            .collect();
        self.project(&keep)
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub kind_hints: HashMap<String, AttributeKind>,
    /// Cell contents (compared trimmed and ASCII case-insensitively) that
    /// denote a missing value.
    pub missing_sentinels: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            kind_hints: HashMap::new(),
            missing_sentinels: DEFAULT_MISSING_SENTINELS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl LoadOptions {
    fn is_missing(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.missing_sentinels
            .iter()
            .any(|s| s.trim().eq_ignore_ascii_case(cell))
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Finds an unterminated quoted field; the csv reader silently swallows the
/// rest of the file in that case.
fn check_quotes(text: &str) -> Result<()> {
    let mut in_quotes = false;
    let mut line = 1u64;
    let mut opened_at = 1u64;
    for ch in text.chars() {
        match ch {
            '"' => {
                in_quotes = !in_quotes;
                if in_quotes {
                    opened_at = line;
                }
            }
            '\n' => line += 1,
            _ => {}
        }
    }
    if in_quotes {
        return Err(TabularError::Parse {
            line: opened_at,
            message: "unterminated quoted field".into(),
        });
    }
    Ok(())
}

fn csv_error(err: csv::Error) -> TabularError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    TabularError::Parse { line, message }
}

/// Reads a UTF-8 CSV file with a header row.
///
/// A column is numeric when every non-missing cell parses as a finite real
/// number, unless a kind hint says otherwise. Row ids are assigned in file
/// order starting at 0.
pub fn load_csv<R: Read>(mut source: R, options: &LoadOptions) -> Result<Dataset> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|e| TabularError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        TabularError::Parse {
            line: 1 + valid.iter().filter(|&&b| b == b'\n').count() as u64,
            message: "invalid UTF-8".into(),
        }
    })?;
    check_quotes(&text)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(TabularError::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    for name in options.kind_hints.keys() {
        if !header.contains(name) {
            return Err(TabularError::UnknownAttribute(name.clone()));
        }
    }

    let mut raw: Vec<(u64, Vec<Option<String>>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cells = record
            .iter()
            .map(|c| (!options.is_missing(c)).then(|| c.to_string()))
            .collect();
        raw.push((line, cells));
    }

    let mut attributes = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        let kind = match options.kind_hints.get(name) {
            Some(&k) => k,
            None => {
                let all_numeric = raw
                    .iter()
                    .filter_map(|(_, cells)| cells[j].as_deref())
                    .all(|c| parse_number(c).is_some());
                if all_numeric {
                    AttributeKind::Numeric
                } else {
                    AttributeKind::Nominal
                }
            }
        };
        attributes.push(Attribute::new(name.clone(), kind));
    }
    let schema = Schema::new(attributes)?;

    let mut rows = Vec::with_capacity(raw.len());
    for (line, cells) in raw {
        let mut row = Vec::with_capacity(cells.len());
        for (j, cell) in cells.into_iter().enumerate() {
            let value = match (cell, schema.attribute(j).kind) {
                (None, _) => Value::Missing,
                (Some(c), AttributeKind::Nominal) => Value::Label(c),
                (Some(c), AttributeKind::Numeric) => match parse_number(&c) {
                    Some(x) => Value::Number(x),
                    None => {
                        return Err(TabularError::Parse {
                            line,
                            message: format!(
                                "`{}` is declared numeric but cell `{c}` is not a number",
                                schema.attribute(j).name
                            ),
                        })
                    }
                },
            };
            row.push(value);
        }
        rows.push(row);
    }
    Dataset::from_rows(schema, rows)
}

/// Writes a dataset as RFC-4180 CSV. With `with_row_id` the first column is
/// `row_id`.
pub fn write_csv<W: Write>(ds: &Dataset, sink: W, with_row_id: bool) -> Result<()> {
    let wr = |e: csv::Error| TabularError::Write(e.to_string());
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let mut header: Vec<String> = Vec::with_capacity(ds.n_attributes() + 1);
    if with_row_id {
        header.push("row_id".into());
    }
    header.extend(ds.schema().names().map(str::to_string));
    writer.write_record(&header).map_err(wr)?;
    for (i, row) in ds.rows().iter().enumerate() {
        let mut record: Vec<String> = Vec::with_capacity(row.len() + 1);
        if with_row_id {
            record.push(ds.row_id(i).to_string());
        }
        record.extend(row.iter().map(Value::to_string));
        writer.write_record(&record).map_err(wr)?;
    }
    writer
        .flush()
        .map_err(|e| TabularError::Write(e.to_string()))
}

/// Summary statistics of one column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub attribute: String,
    pub kind: AttributeKind,
    /// Non-missing cells.
    pub count: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub std_dev: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mode: Option<Value>,
}

/// Most frequent non-missing value; ties go to the value seen first.
pub(crate) fn mode_of<'a, I>(values: I) -> Option<Value>
where
    I: IntoIterator<Item = &'a Value>,
{
    #[derive(PartialEq, Eq, Hash)]
    enum Key<'a> {
        Num(u64),
        Lab(&'a str),
    }
    let mut counts: HashMap<Key<'a>, (usize, usize, &'a Value)> = HashMap::new();
    for (pos, v) in values.into_iter().enumerate() {
        let key = match v {
            // -0.0 and 0.0 are the same value
            Value::Number(x) => Key::Num((x + 0.0).to_bits()),
            Value::Label(s) => Key::Lab(s),
            Value::Missing => continue,
        };
        counts.entry(key).or_insert((0, pos, v)).0 += 1;
    }
    counts
        .into_values()
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, _, v)| v.clone())
}

pub fn column_stats(ds: &Dataset, attr: &str) -> Result<ColumnStats> {
    let j = ds.schema().require(attr)?;
    let kind = ds.schema().attribute(j).kind;
    let count = ds.column(j).filter(|v| !v.is_missing()).count();
    let missing = ds.n_rows() - count;
    let mode = mode_of(ds.column(j));

    let (mut mean, mut std_dev, mut min, mut max) = (None, None, None, None);
    if kind == AttributeKind::Numeric && count > 0 {
        let xs: Vec<f64> = ds.column(j).filter_map(Value::as_number).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = xs.len() as f64;
        // rounding can push the mean of a constant column past its bounds
        let m = (xs.iter().sum::<f64>() / n).clamp(lo, hi);
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        mean = Some(m);
        std_dev = Some(var.sqrt());
        min = Some(lo);
        max = Some(hi);
    }
    Ok(ColumnStats {
        attribute: attr.to_string(),
        kind,
        count,
        missing,
        mean,
        std_dev,
        min,
        max,
        mode,
    })
}

/// Z-score normalization of the listed numeric attributes.
///
/// Zero-variance columns become all zeros. Missing cells stay missing.
pub fn znormalize<S: AsRef<str>>(ds: &Dataset, attrs: &[S]) -> Result<Dataset> {
    let mut out = ds.clone();
    for name in attrs {
        let name = name.as_ref();
        let j = ds.schema().require(name)?;
        if ds.schema().attribute(j).kind != AttributeKind::Numeric {
            return Err(TabularError::NotNumeric(name.to_string()));
        }
        let stats = column_stats(ds, name)?;
        let (Some(mean), Some(sd)) = (stats.mean, stats.std_dev) else {
            continue;
        };
        for row in out.rows.iter_mut() {
            if let Value::Number(x) = row[j] {
                row[j] = Value::Number(if sd > 0.0 { (x - mean) / sd } else { 0.0 });
            }
        }
    }
    Ok(out)
}

/// Gower-style dissimilarity fitted to one dataset's numeric ranges.
///
/// Numeric attributes contribute `|a - b| / range` (0 when the range is 0),
/// nominal attributes contribute 0 or 1. Attributes missing on either side
/// are left out and the average is taken over the rest; a pair with nothing
/// in common has distance 0.
#[derive(Debug, Clone)]
pub struct GowerMetric {
    kinds: Vec<AttributeKind>,
    ranges: Vec<f64>,
}

impl GowerMetric {
    pub fn fit(ds: &Dataset) -> Self {
        let kinds: Vec<AttributeKind> = ds.schema().attributes().iter().map(|a| a.kind).collect();
        let ranges = (0..ds.n_attributes())
            .map(|j| {
                let (lo, hi) = ds
                    .column(j)
                    .filter_map(Value::as_number)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                if hi > lo {
                    hi - lo
                } else {
                    0.0
                }
            })
            .collect();
        GowerMetric { kinds, ranges }
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    fn check(&self, row: &[Value]) -> Result<()> {
        if row.len() != self.kinds.len() {
            return Err(TabularError::SchemaMismatch(format!(
                "row has {} values, schema has {}",
                row.len(),
                self.kinds.len()
            )));
        }
        for (j, (v, &k)) in row.iter().zip(&self.kinds).enumerate() {
            if !v.conforms_to(k) {
                return Err(TabularError::SchemaMismatch(format!(
                    "value at position {j} does not match its attribute kind"
                )));
            }
        }
        Ok(())
    }

    pub fn distance(&self, a: &[Value], b: &[Value]) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let mut sum = 0.0;
        let mut used = 0usize;
        for j in 0..self.kinds.len() {
            let d = match (&a[j], &b[j]) {
                (Value::Number(x), Value::Number(y)) => scaled_gap(*x, *y, self.ranges[j]),
                (Value::Label(x), Value::Label(y)) => {
                    if x == y {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => continue,
            };
            sum += d;
            used += 1;
        }
        Ok(if used == 0 { 0.0 } else { sum / used as f64 })
    }
}

#[inline]
fn scaled_gap(x: f64, y: f64, range: f64) -> f64 {
    if range > 0.0 {
        (x - y).abs() / range
    } else {
        0.0
    }
}

/// Gower distance between two rows, with ranges taken from `ds`.
pub fn mixed_distance(a: &[Value], b: &[Value], ds: &Dataset) -> Result<f64> {
    if a.len() != ds.n_attributes() || b.len() != ds.n_attributes() {
        return Err(TabularError::SchemaMismatch(format!(
            "rows of length {} and {} for a {}-attribute schema",
            a.len(),
            b.len(),
            ds.n_attributes()
        )));
    }
    GowerMetric::fit(ds).distance(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Num(f64),
    Cat(u32),
    Missing,
}

/// A dataset encoded for fast all-pairs Gower distances.
///
/// Produces bit-identical results to [`GowerMetric::distance`] on the rows
/// of the dataset it was built from.
#[derive(Debug, Clone)]
pub struct GowerSpace {
    n_rows: usize,
    width: usize,
    cells: Vec<Cell>,
    ranges: Vec<f64>,
}

impl GowerSpace {
    pub fn new(ds: &Dataset) -> Self {
        let metric = GowerMetric::fit(ds);
        let width = ds.n_attributes();
        let mut dictionaries: Vec<HashMap<&str, u32>> = vec![HashMap::new(); width];
        let mut cells = Vec::with_capacity(ds.n_rows() * width);
        for row in ds.rows() {
            for (j, v) in row.iter().enumerate() {
                cells.push(match v {
                    Value::Number(x) => Cell::Num(*x),
                    Value::Label(s) => {
                        let next = dictionaries[j].len() as u32;
                        Cell::Cat(*dictionaries[j].entry(s.as_str()).or_insert(next))
                    }
                    Value::Missing => Cell::Missing,
                });
            }
        }
        GowerSpace {
            n_rows: ds.n_rows(),
            width,
            cells,
            ranges: metric.ranges,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = &self.cells[i * self.width..(i + 1) * self.width];
        let b = &self.cells[j * self.width..(j + 1) * self.width];
        let mut sum = 0.0;
        let mut used = 0usize;
        for k in 0..self.width {
            let d = match (a[k], b[k]) {
                (Cell::Num(x), Cell::Num(y)) => scaled_gap(x, y, self.ranges[k]),
                (Cell::Cat(x), Cell::Cat(y)) => {
                    if x == y {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => continue,
            };
            sum += d;
            used += 1;
        }
        if used == 0 {
            0.0
        } else {
            sum / used as f64
        }
    }

    /// Distances from row `i` to every row, in row order.
    pub fn distances_from(&self, i: usize) -> Vec<f64> {
        (0..self.n_rows).map(|j| self.distance(i, j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningMethod {
    EqualWidth,
    EqualFrequency,
}

fn interval_label(lo: f64, hi: f64, closed: bool) -> String {
    if closed {
        format!("[{lo},{hi}]")
    } else {
        format!("[{lo},{hi})")
    }
}

/// Interval edges for equal-frequency binning: cut points sit midway between
/// consecutive distinct values once the running count reaches the next
/// quantile target, so tied values never straddle a cut.
fn equal_frequency_edges(sorted: &[f64], n_bins: usize) -> Vec<f64> {
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &x in sorted {
        match distinct.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => distinct.push((x, 1)),
        }
    }
    let m = sorted.len() as f64;
    let mut edges = vec![sorted[0]];
    let mut cumulative = 0usize;
    let mut next_bin = 1usize;
    for w in distinct.windows(2) {
        cumulative += w[0].1;
        let mut reached = false;
        while next_bin < n_bins && cumulative as f64 >= next_bin as f64 * m / n_bins as f64 {
            next_bin += 1;
            reached = true;
        }
        if reached {
            edges.push(w[0].0 + (w[1].0 - w[0].0) / 2.0);
        }
    }
    edges.push(sorted[sorted.len() - 1]);
    edges
}

/// Replaces a numeric attribute by a nominal one whose labels are interval
/// bounds. Intervals are half-open `[lo,hi)` except the last, which is
/// closed.
pub fn discretize(
    ds: &Dataset,
    attr: &str,
    n_bins: usize,
    method: BinningMethod,
) -> Result<Dataset> {
    if n_bins < 2 {
        return Err(TabularError::TooFewBins(n_bins));
    }
    let j = ds.schema().require(attr)?;
    if ds.schema().attribute(j).kind != AttributeKind::Numeric {
        return Err(TabularError::NotNumeric(attr.to_string()));
    }
    let mut sorted: Vec<f64> = ds.column(j).filter_map(Value::as_number).collect();
    if sorted.is_empty() {
        return Err(TabularError::AllMissing(attr.to_string()));
    }
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);

    let edges: Vec<f64> = if hi == lo {
        vec![lo, hi]
    } else {
        match method {
            BinningMethod::EqualWidth => {
                let width = (hi - lo) / n_bins as f64;
                let mut e: Vec<f64> = (0..n_bins).map(|i| lo + i as f64 * width).collect();
                e.push(hi);
                e
            }
            BinningMethod::EqualFrequency => equal_frequency_edges(&sorted, n_bins),
        }
    };
    let n_intervals = edges.len() - 1;
    let labels: Vec<String> = (0..n_intervals)
        .map(|i| interval_label(edges[i], edges[i + 1], i + 1 == n_intervals))
        .collect();

    let values = ds
        .column(j)
        .map(|v| match v {
            Value::Number(x) => {
                let bin = (0..n_intervals - 1)
                    .find(|&i| *x < edges[i + 1])
                    .unwrap_or(n_intervals - 1);
                Value::Label(labels[bin].clone())
            }
            _ => Value::Missing,
        })
        .collect();
    ds.with_column(Attribute::nominal(attr), values)
}
