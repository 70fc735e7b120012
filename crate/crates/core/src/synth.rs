//! Seeded synthetic tables, ground-truth anomaly injection and detection
//! quality metrics.

use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{
    column_stats, Attribute, AttributeKind, Dataset, Schema, TabularError, Value,
};

const GENERATE_STREAM: u64 = 0;
const INJECT_STREAM: u64 = 1;
pub const DEFAULT_MAGNITUDE: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error("n_rows must be at least 1")]
    NoRows,
    #[error("attribute {name}: {message}")]
    InvalidDistribution { name: String, message: String },
    #[error("injection rate must be in (0, 0.5), got {0}")]
    InvalidRate(f64),
    #[error("rate {rate} selects no rows out of {rows}")]
    NothingToInject { rate: f64, rows: usize },
    #[error("at least one injection kind is required")]
    NoKinds,
    #[error("at least one target attribute is required")]
    NoTargets,
    #[error("magnitude must be positive, got {0}")]
    InvalidMagnitude(f64),
    #[error("no configured corruption can change row {0}")]
    NoFeasibleCorruption(usize),
    #[error("flags cover {flags} rows, truth covers {truth}")]
    LengthMismatch { flags: usize, truth: usize },
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericColumn {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalColumn {
    pub name: String,
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthPlan {
    pub n_rows: usize,
    #[serde(default)]
    pub numeric: Vec<NumericColumn>,
    #[serde(default)]
    pub nominal: Vec<NominalColumn>,
    #[serde(default)]
    pub target: Option<NominalColumn>,
    #[serde(default)]
    pub seed: u64,
}

fn bad(name: &str, message: impl Into<String>) -> SynthError {
    SynthError::InvalidDistribution {
        name: name.to_string(),
        message: message.into(),
    }
}

impl NominalColumn {
    fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(bad(&self.name, "no labels"));
        }
        if self.labels.len() != self.probabilities.len() {
            return Err(bad(&self.name, "labels and probabilities differ in length"));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(l) {
                return Err(bad(&self.name, format!("duplicate label {l:?}")));
            }
        }
        if self
            .probabilities
            .iter()
            .any(|p| !(p.is_finite() && *p >= 0.0))
        {
            return Err(bad(&self.name, "probabilities must be non-negative"));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad(&self.name, format!("probabilities sum to {total}")));
        }
        Ok(())
    }
}

impl SynthPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(SynthError::NoRows);
        }
        for a in &self.numeric {
            if !a.mean.is_finite() || !(a.std.is_finite() && a.std >= 0.0) {
                return Err(bad(&a.name, "mean must be finite and std non-negative"));
            }
        }
        for a in self.nominal.iter().chain(&self.target) {
            a.validate()?;
        }
        self.schema().map(|_| ())
    }

    /// Numeric attributes, then nominal ones, then the target.
    pub fn schema(&self) -> Result<Schema> {
        let attrs = self
            .numeric
            .iter()
            .map(|a| Attribute::numeric(a.name.clone()))
            .chain(
                self.nominal
                    .iter()
                    .chain(&self.target)
                    .map(|a| Attribute::nominal(a.name.clone())),
            )
            .collect();
        Ok(Schema::new(attrs)?)
    }
}

/// Draws a table column by column from one seeded stream.
pub fn generate(plan: &SynthPlan) -> Result<Dataset> {
    plan.validate()?;
    let n = plan.n_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(GENERATE_STREAM);
    let mut columns: Vec<Vec<Value>> = Vec::new();
    for a in &plan.numeric {
        let normal = Normal::new(a.mean, a.std).map_err(|e| bad(&a.name, e.to_string()))?;
        columns.push(
            (0..n)
                .map(|_| Value::Number(normal.sample(&mut rng)))
                .collect(),
        );
    }
    for a in plan.nominal.iter().chain(&plan.target) {
        let weights =
            WeightedIndex::new(&a.probabilities).map_err(|e| bad(&a.name, e.to_string()))?;
        columns.push(
            (0..n)
                .map(|_| Value::Label(a.labels[weights.sample(&mut rng)].clone()))
                .collect(),
        );
    }
    let rows = (0..n)
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect();
    Ok(Dataset::from_rows(plan.schema()?, rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    /// Numeric cell shifted by `± magnitude · std` of its column.
    PointOutlier,
    /// Nominal cell swapped for another label observed in its column.
    LabelNoise,
    /// Cell blanked.
    MissingBurst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionPlan {
    pub rate: f64,
    pub kinds: Vec<InjectionKind>,
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    pub target_attrs: Vec<String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_magnitude() -> f64 {
    DEFAULT_MAGNITUDE
}

impl InjectionPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate < 0.5) {
            return Err(SynthError::InvalidRate(self.rate));
        }
        if self.kinds.is_empty() {
            return Err(SynthError::NoKinds);
        }
        if self.target_attrs.is_empty() {
            return Err(SynthError::NoTargets);
        }
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(SynthError::InvalidMagnitude(self.magnitude));
        }
        Ok(())
    }
}

/// One corrupted cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Injection {
    pub row_id: usize,
    pub attribute: String,
    pub kind: InjectionKind,
    pub original: Value,
    pub corrupted: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injected {
    pub data: Dataset,
    /// Per row, whether it was corrupted.
    pub truth: Vec<bool>,
    pub injections: Vec<Injection>,
}

struct Target {
    index: usize,
    name: String,
    kind: AttributeKind,
    std: f64,
    labels: Vec<String>,
}

/// Corrupts one cell in each of `⌈rate · n⌉` distinct seeded rows.
///
/// For every chosen row a (kind, attribute) pair is drawn among those that
/// actually change the cell, so the ground truth marks exactly the rows
/// that differ from the input.
pub fn inject(ds: &Dataset, plan: &InjectionPlan) -> Result<Injected> {
    plan.validate()?;
    let mut targets = Vec::with_capacity(plan.target_attrs.len());
    for name in &plan.target_attrs {
        let index = ds.schema().require(name)?;
        let stats = column_stats(ds, name)?;
        let mut labels: Vec<String> = Vec::new();
        for v in ds.column(index) {
            if let Value::Label(s) = v {
                if !labels.contains(s) {
                    labels.push(s.clone());
                }
            }
        }
        targets.push(Target {
            index,
            name: name.clone(),
            kind: stats.kind,
            std: stats.std_dev.unwrap_or(0.0),
            labels,
        });
    }

    let n = ds.n_rows();
    let count = (plan.rate * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if count == 0 || count > n {
        return Err(SynthError::NothingToInject {
            rate: plan.rate,
            rows: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(INJECT_STREAM);
    let mut chosen = sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();

    let mut rows = ds.rows().to_vec();
    let mut truth = vec![false; n];
    let mut injections = Vec::with_capacity(count);
    for &r in &chosen {
        let mut options: Vec<(InjectionKind, &Target)> = Vec::new();
        for t in &targets {
            let cell = &rows[r][t.index];
            for &kind in &plan.kinds {
                let feasible = match kind {
                    InjectionKind::PointOutlier => {
                        t.kind == AttributeKind::Numeric && t.std > 0.0 && !cell.is_missing()
                    }
                    InjectionKind::LabelNoise => {
                        t.kind == AttributeKind::Nominal && !cell.is_missing() && t.labels.len() > 1
                    }
                    InjectionKind::MissingBurst => !cell.is_missing(),
                };
                if feasible {
                    options.push((kind, t));
                }
            }
        }
        if options.is_empty() {
            return Err(SynthError::NoFeasibleCorruption(ds.row_id(r)));
        }
        let (kind, t) = options[rng.random_range(0..options.len())];
        let original = rows[r][t.index].clone();
        let corrupted = match kind {
            InjectionKind::PointOutlier => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let x = original.as_number().expect("numeric target");
                Value::Number(x + sign * plan.magnitude * t.std)
            }
            InjectionKind::LabelNoise => {
                let others: Vec<&String> = t
                    .labels
                    .iter()
                    .filter(|l| original.as_label() != Some(l.as_str()))
                    .collect();
                Value::Label(others[rng.random_range(0..others.len())].clone())
            }
            InjectionKind::MissingBurst => Value::Missing,
        };
        rows[r][t.index] = corrupted.clone();
        truth[r] = true;
        injections.push(Injection {
            row_id: ds.row_id(r),
            attribute: t.name.clone(),
            kind,
            original,
            corrupted,
        });
    }
    let data = Dataset::new(ds.schema().clone(), rows, ds.row_ids().to_vec())?;
    Ok(Injected {
        data,
        truth,
        injections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Precision, recall and F1 of `flags` against `truth`. An empty
/// denominator counts as perfect for precision and recall; F1 is 0 when
/// both are 0.
pub fn evaluate(flags: &[bool], truth: &[bool]) -> Result<EvalResult> {
    if flags.len() != truth.len() {
        return Err(SynthError::LengthMismatch {
            flags: flags.len(),
            truth: truth.len(),
        });
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&f, &t) in flags.iter().zip(truth) {
        match (f, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EvalResult {
        precision,
        recall,
        f1,
        confusion: c,
    })
}

fn nominal(name: &str, labels: &[&str], probabilities: &[f64]) -> NominalColumn {
    NominalColumn {
        name: name.to_string(),
        labels: labels.iter().map(|l| l.to_string()).collect(),
        probabilities: probabilities.to_vec(),
    }
}

fn numeric(name: &str, mean: f64, std: f64) -> NumericColumn {
    NumericColumn {
        name: name.to_string(),
        mean,
        std,
    }
}

/// Names of the numeric attributes of [`affidavit_like`].
pub const AFFIDAVIT_NUMERIC: [&str; 8] = [
    "ddjj_id",
    "ano",
    "persona_id",
    "ingreso",
    "cant_acciones",
    "porcentaje",
    "superficiem2",
    "valor_patrim",
];

/// A 24-attribute table shaped like a prepared real-estate affidavit
/// table: 8 numeric attributes, 15 nominal ones and `val_decl` as target.
pub fn affidavit_like(n_rows: usize, seed: u64) -> SynthPlan {
    let [ddjj_id, ano, persona_id, ingreso, cant_acciones, porcentaje, superficiem2, valor_patrim] =
        AFFIDAVIT_NUMERIC;
    SynthPlan {
        n_rows,
        numeric: vec![
            numeric(ddjj_id, 5000.0, 1500.0),
            numeric(ano, 2009.0, 3.0),
            numeric(persona_id, 800.0, 250.0),
            numeric(ingreso, 60000.0, 15000.0),
            numeric(cant_acciones, 100.0, 30.0),
            numeric(porcentaje, 50.0, 12.0),
            numeric(superficiem2, 250.0, 80.0),
            numeric(valor_patrim, 400000.0, 120000.0),
        ],
        nominal: vec![
            nominal(
                "tipo_ddjj",
                &["anual", "inicial", "baja"],
                &[0.95, 0.025, 0.025],
            ),
            nominal(
                "poder",
                &["ejecutivo", "legislativo", "judicial"],
                &[0.95, 0.025, 0.025],
            ),
            nominal("nombre", &["titular", "otro"], &[0.95, 0.05]),
            nominal(
                "cargo",
                &["diputado", "senador", "juez"],
                &[0.95, 0.025, 0.025],
            ),
            nominal("jurisdiccion", &["nacional", "provincial"], &[0.95, 0.05]),
            nominal("descripcion_del_bien", &["inmueble", "otro"], &[0.95, 0.05]),
            nominal(
                "destino",
                &["vivienda", "comercial", "rural"],
                &[0.95, 0.025, 0.025],
            ),
            nominal(
                "localidad",
                &["caba", "la plata", "cordoba"],
                &[0.95, 0.025, 0.025],
            ),
            nominal(
                "nombre_bien_s",
                &["departamento", "casa", "propiedad horizontal"],
                &[0.95, 0.025, 0.025],
            ),
            nominal(
                "origen",
                &["propio", "herencia", "donacion"],
                &[0.95, 0.025, 0.025],
            ),
            nominal("pais", &["argentina", "uruguay"], &[0.95, 0.05]),
            nominal(
                "provincia",
                &["buenos aires", "cordoba", "mendoza"],
                &[0.95, 0.025, 0.025],
            ),
            nominal("tipo_bien_s", &["inmueble", "terreno"], &[0.95, 0.05]),
            nominal("titular_dominio", &["titular", "conyuge"], &[0.95, 0.05]),
            nominal(
                "vinculo",
                &["titular", "conyuge", "conviviente"],
                &[0.95, 0.025, 0.025],
            ),
        ],
        target: Some(nominal(
            "val_decl",
            &["Fiscal", "Subfiscal", "Market", "NotDeclared"],
            &[0.97, 0.01, 0.01, 0.01],
        )),
        seed,
    }
}
