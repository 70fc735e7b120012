//! The TOML configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hybrid_audit::prep::{AreaUnit, ColumnRoles, PrepConfig, DEFAULT_TOLERANCE};
use hybrid_audit::procedures::{DetectorParams, ProcOneConfig, ProcTwoConfig, VoteConfig};
use hybrid_audit::synth::{InjectionPlan, NominalColumn, NumericColumn, SynthPlan};
use hybrid_audit::tabular::LoadOptions;
use hybrid_audit::AttributeKind;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Overrides every seed in the file when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepare: Option<PrepareSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proc1: Option<Proc1Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proc2: Option<Proc2Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub data: PathBuf,
    /// Column kinds that override type inference.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kinds: BTreeMap<String, AttributeKind>,
    /// Cell values read as missing; the built-in list when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<Vec<String>>,
}

impl InputSection {
    pub fn load_options(&self) -> LoadOptions {
        let mut options = LoadOptions {
            kind_hints: self.kinds.clone().into_iter().collect(),
            ..LoadOptions::default()
        };
        if let Some(m) = &self.missing {
            options.missing_sentinels = m.clone();
        }
        options
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepareSection {
    pub fx: PathBuf,
    pub cpi: PathBuf,
    pub base_year: i32,
    pub columns: ColumnRoles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep: Option<Vec<String>>,
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

impl PrepareSection {
    pub fn prep_config(&self) -> PrepConfig {
        PrepConfig {
            keep: self.keep.clone(),
            columns: self.columns.clone(),
            tolerance: self.tolerance,
            default_area_unit: self.default_area_unit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proc1Section {
    pub target: String,
    #[serde(default = "default_n_bins")]
    pub n_bins: usize,
    #[serde(default = "default_lof_k")]
    pub lof_k: usize,
    #[serde(default = "default_lof_threshold")]
    pub lof_threshold: f64,
    #[serde(default)]
    pub export_flagged: bool,
}

fn default_n_bins() -> usize {
    ProcOneConfig::default().n_bins
}

fn default_lof_k() -> usize {
    ProcOneConfig::default().lof_k
}

fn default_lof_threshold() -> f64 {
    ProcOneConfig::default().lof_threshold
}

impl Proc1Section {
    pub fn procedure(&self) -> ProcOneConfig {
        ProcOneConfig {
            n_bins: self.n_bins,
            lof_k: self.lof_k,
            lof_threshold: self.lof_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Proc2Section {
    pub detectors: DetectorParams,
    pub vote: VoteConfig,
    pub kmeans_seed: u64,
    pub kmeans_max_iter: usize,
    pub kmeans_restarts: usize,
    pub export_flagged: bool,
}

impl Default for Proc2Section {
    fn default() -> Self {
        let p = ProcTwoConfig::default();
        Self {
            detectors: p.detectors,
            vote: p.vote,
            kmeans_seed: p.kmeans_seed,
            kmeans_max_iter: p.kmeans_max_iter,
            kmeans_restarts: p.kmeans_restarts,
            export_flagged: false,
        }
    }
}

impl Proc2Section {
    pub fn procedure(&self) -> ProcTwoConfig {
        ProcTwoConfig {
            detectors: self.detectors,
            vote: self.vote,
            kmeans_seed: self.kmeans_seed,
            kmeans_max_iter: self.kmeans_max_iter,
            kmeans_restarts: self.kmeans_restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Shaped like the asset-declaration table: 8 numeric and 15 nominal
    /// attributes plus a `val_decl` target.
    Affidavit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub n_rows: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub numeric: Vec<NumericColumn>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nominal: Vec<NominalColumn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<NominalColumn>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<InjectionPlan>,
}

impl SynthSection {
    pub fn plan(&self) -> Result<SynthPlan, Failure> {
        match self.preset {
            Some(Preset::Affidavit) => {
                if !self.numeric.is_empty() || !self.nominal.is_empty() || self.target.is_some() {
                    return Err(Failure::Config(
                        "synth: a preset cannot be combined with explicit attributes".into(),
                    ));
                }
                Ok(hybrid_audit::synth::affidavit_like(self.n_rows, self.seed))
            }
            None => Ok(SynthPlan {
                n_rows: self.n_rows,
                numeric: self.numeric.clone(),
                nominal: self.nominal.clone(),
                target: self.target.clone(),
                seed: self.seed,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// A `proc1` or `proc2` report.
    pub report: PathBuf,
    /// A `row_id,is_anomaly` CSV.
    pub truth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall_floor: Option<f64>,
}

/// A parsed configuration together with the directory its relative paths
/// are resolved against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path, seed: Option<u64>) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let mut config: Config = toml::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = seed.or(config.seed) {
            config.apply_seed(s);
        }
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Loaded { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Resolves a path the command reads, failing if it does not exist.
    pub fn existing(&self, p: &Path) -> Result<PathBuf, Failure> {
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(Failure::Config(format!(
                "input file {} does not exist",
                full.display()
            )));
        }
        Ok(full)
    }

    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        match (cli, &self.config.output_dir) {
            (Some(dir), _) => dir.to_path_buf(),
            (None, Some(dir)) => self.resolve(dir),
            (None, None) => self.base.join("out"),
        }
    }

    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
        section
            .as_ref()
            .ok_or_else(|| Failure::Config(format!("missing [{name}] section")))
    }
}

impl Config {
    fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        if let Some(s) = &mut self.synth {
            s.seed = seed;
            if let Some(i) = &mut s.inject {
                i.seed = seed;
            }
        }
        if let Some(p) = &mut self.proc2 {
            p.kmeans_seed = seed;
        }
    }
}
