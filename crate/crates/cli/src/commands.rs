//! The five subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use hybrid_audit::detectors::AttributeRanking;
use hybrid_audit::prep::{self, CpiTable, FxTable, PrepSummary};
use hybrid_audit::procedures::{procedure_one, procedure_two, OutlierReport};
use hybrid_audit::synth::{evaluate, generate, inject, EvalResult, Injection};
use hybrid_audit::tabular::{load_csv, write_csv, LoadOptions};
use hybrid_audit::{AttributeKind, Dataset, Value};
use serde::Serialize;
use serde_json::Value as Json;

use crate::config::Loaded;
use crate::failure::{io, Failure};
use crate::output::{json_bytes, ReportEnvelope, Staging};

/// What a successful command leaves behind.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Printed on standard output instead of the file list.
    pub stdout: Option<String>,
    /// Set when outputs were written but a quality gate failed.
    pub gate: Option<Failure>,
}

impl Outcome {
    fn files(files: Vec<PathBuf>) -> Self {
        Outcome {
            files,
            stdout: None,
            gate: None,
        }
    }
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| io(&path.display().to_string(), e))
}

fn read_csv(path: &Path, options: &LoadOptions) -> Result<Dataset, Failure> {
    load_csv(open(path)?, options).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn csv_bytes(ds: &Dataset, with_row_id: bool) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf, with_row_id)?;
    Ok(buf)
}

fn load_input(l: &Loaded) -> Result<Dataset, Failure> {
    let input = l.section(&l.config.input, "input")?;
    let path = l.existing(&input.data)?;
    read_csv(&path, &input.load_options())
}

/// `row_id,<columns>` rows for the given ids, in row order.
fn flagged_csv(ds: &Dataset, ids: &BTreeSet<usize>) -> Result<Vec<u8>, Failure> {
    let positions: Vec<usize> = (0..ds.n_rows())
        .filter(|&i| ids.contains(&ds.row_id(i)))
        .collect();
    csv_bytes(&ds.select_rows(&positions), true)
}

pub fn prepare(l: &Loaded, out: &Path) -> Result<Outcome, Failure> {
    let sec = l.section(&l.config.prepare, "prepare")?;
    let input = l.section(&l.config.input, "input")?;
    let data_path = l.existing(&input.data)?;
    let fx_path = l.existing(&sec.fx)?;
    let cpi_path = l.existing(&sec.cpi)?;

    let raw = read_csv(&data_path, &input.load_options())?;
    let fx = FxTable::from_csv(open(&fx_path)?)?;
    let cpi = CpiTable::from_csv(open(&cpi_path)?, sec.base_year)?;
    let prepared = prep::prepare(&raw, &sec.prep_config(), &fx, &cpi)?;

    let mut log = Vec::new();
    for w in &prepared.log {
        log.extend(serde_json::to_vec(w).map_err(|e| Failure::Data(e.to_string()))?);
        log.push(b'\n');
    }
    let warnings = if prepared.log.is_empty() {
        Vec::new()
    } else {
        vec![format!(
            "{} rows logged warnings, see prepare_log.jsonl",
            prepared
                .log
                .iter()
                .map(|w| w.row_id)
                .collect::<BTreeSet<_>>()
                .len()
        )]
    };
    let report: ReportEnvelope<&PrepSummary> =
        ReportEnvelope::new("prepare", &l.config, &prepared.summary, warnings)?;

    let mut staging = Staging::new(out)?;
    staging.write("prepared.csv", &csv_bytes(&prepared.data, false)?)?;
    staging.write("prepare_log.jsonl", &log)?;
    staging.write("prepare_report.json", &json_bytes(&report)?)?;
    Ok(Outcome::files(staging.commit()?))
}

pub fn proc1(l: &Loaded, out: &Path) -> Result<Outcome, Failure> {
    let sec = l.section(&l.config.proc1, "proc1")?;
    let cfg = sec.procedure();
    cfg.validate()?;
    let ds = load_input(l)?;
    let t = ds.schema().index_of(&sec.target).ok_or_else(|| {
        Failure::Config(format!(
            "target `{}` is not a column of the input",
            sec.target
        ))
    })?;
    if ds.schema().attribute(t).kind != AttributeKind::Nominal {
        return Err(Failure::Config(format!(
            "target `{}` must be nominal",
            sec.target
        )));
    }
    let result = procedure_one(&ds, &sec.target, &cfg)?;
    let report = ReportEnvelope::new("proc1", &l.config, &result.bins, result.warnings.clone())?;

    let mut staging = Staging::new(out)?;
    staging.write("proc1_report.json", &json_bytes(&report)?)?;
    if sec.export_flagged {
        let ids: BTreeSet<usize> = result
            .bins
            .iter()
            .flat_map(|b| b.outlier_row_ids.iter().copied())
            .collect();
        staging.write("proc1_flagged.csv", &flagged_csv(&ds, &ids)?)?;
    }
    Ok(Outcome::files(staging.commit()?))
}

#[derive(Serialize)]
struct Proc2Payload<'a> {
    outlier_report: &'a OutlierReport,
    attribute_ranking: &'a AttributeRanking,
    cluster_sizes: &'a [usize],
}

pub fn proc2(l: &Loaded, out: &Path) -> Result<Outcome, Failure> {
    let sec = l.section(&l.config.proc2, "proc2")?;
    let cfg = sec.procedure();
    cfg.validate()?;
    let ds = load_input(l)?;
    let result = procedure_two(&ds, &cfg)?;
    let payload = Proc2Payload {
        outlier_report: &result.report,
        attribute_ranking: &result.ranking,
        cluster_sizes: &result.cluster_sizes,
    };
    let report = ReportEnvelope::new("proc2", &l.config, payload, result.notes.clone())?;

    let mut staging = Staging::new(out)?;
    staging.write("proc2_report.json", &json_bytes(&report)?)?;
    if sec.export_flagged {
        let ids: BTreeSet<usize> = result.report.flagged_row_ids.iter().copied().collect();
        staging.write("proc2_flagged.csv", &flagged_csv(&ds, &ids)?)?;
    }
    Ok(Outcome::files(staging.commit()?))
}

#[derive(Serialize)]
struct SynthPayload<'a> {
    n_rows: usize,
    attributes: Vec<&'a str>,
    anomalies: usize,
    injections: &'a [Injection],
}

pub fn synth(l: &Loaded, out: &Path) -> Result<Outcome, Failure> {
    let sec = l.section(&l.config.synth, "synth")?;
    let plan = sec.plan()?;
    let clean = generate(&plan)?;
    let (data, truth, injections) = match &sec.inject {
        Some(i) => {
            let r = inject(&clean, i)?;
            (r.data, r.truth, r.injections)
        }
        None => {
            let n = clean.n_rows();
            (clean, vec![false; n], Vec::new())
        }
    };

    let mut truth_csv = String::from("row_id,is_anomaly\n");
    for (i, t) in truth.iter().enumerate() {
        truth_csv.push_str(&format!("{},{}\n", data.row_id(i), t));
    }
    let payload = SynthPayload {
        n_rows: data.n_rows(),
        attributes: data.schema().names().collect(),
        anomalies: truth.iter().filter(|&&t| t).count(),
        injections: &injections,
    };
    let report = ReportEnvelope::new("synth", &l.config, payload, Vec::new())?;

    let mut staging = Staging::new(out)?;
    staging.write("synth_data.csv", &csv_bytes(&data, false)?)?;
    staging.write("synth_truth.csv", truth_csv.as_bytes())?;
    staging.write("synth_report.json", &json_bytes(&report)?)?;
    Ok(Outcome::files(staging.commit()?))
}

/// Flagged row ids of a `proc1` or `proc2` report, and the row count the
/// report covers when it records one.
fn report_flags(report: &Json) -> Result<(BTreeSet<usize>, Option<usize>), Failure> {
    let bad = |what: &str| Failure::Data(format!("report: {what}"));
    let ids = |v: &Json| -> Result<Vec<usize>, Failure> {
        v.as_array()
            .ok_or_else(|| bad("row id list expected"))?
            .iter()
            .map(|x| {
                x.as_u64()
                    .map(|x| x as usize)
                    .ok_or_else(|| bad("row ids must be non-negative integers"))
            })
            .collect()
    };
    match report.get("command").and_then(Json::as_str) {
        Some("proc2") => {
            let r = &report["payload"]["outlier_report"];
            let n = r["n_rows"]
                .as_u64()
                .ok_or_else(|| bad("outlier_report.n_rows missing"))?;
            Ok((
                ids(&r["flagged_row_ids"])?.into_iter().collect(),
                Some(n as usize),
            ))
        }
        Some("proc1") => {
            let mut all = BTreeSet::new();
            for bin in report["payload"]
                .as_array()
                .ok_or_else(|| bad("bin list expected"))?
            {
                all.extend(ids(&bin["outlier_row_ids"])?);
            }
            Ok((all, None))
        }
        _ => Err(bad("not a proc1 or proc2 report")),
    }
}

fn read_truth(path: &Path) -> Result<Vec<(usize, bool)>, Failure> {
    let options = LoadOptions {
        missing_sentinels: Vec::new(),
        ..LoadOptions::default()
    };
    let ds = read_csv(path, &options)?;
    let names: Vec<&str> = ds.schema().names().collect();
    if names != ["row_id", "is_anomaly"] {
        return Err(Failure::Data(format!(
            "{}: header must be row_id,is_anomaly",
            path.display()
        )));
    }
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(ds.n_rows());
    for i in 0..ds.n_rows() {
        let line = i + 2;
        let id = match ds.cell(i, 0) {
            Value::Number(x) if *x >= 0.0 && x.fract() == 0.0 => *x as usize,
            v => {
                return Err(Failure::Data(format!(
                    "{} line {line}: bad row_id {v:?}",
                    path.display()
                )))
            }
        };
        let flag = match ds
            .cell(i, 1)
            .to_string()
            .trim()
            .to_ascii_lowercase()
            .as_str()
        {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(Failure::Data(format!(
                    "{} line {line}: bad is_anomaly {other:?}",
                    path.display()
                )))
            }
        };
        if !seen.insert(id) {
            return Err(Failure::Data(format!(
                "{} line {line}: duplicate row_id {id}",
                path.display()
            )));
        }
        rows.push((id, flag));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct EvalPayload<'a> {
    report: &'a Path,
    truth: &'a Path,
    result: EvalResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    recall_floor: Option<f64>,
    passed: bool,
}

pub fn eval(l: &Loaded, out: &Path) -> Result<Outcome, Failure> {
    let sec = l.section(&l.config.eval, "eval")?;
    if let Some(f) = sec.recall_floor {
        if !(0.0..=1.0).contains(&f) {
            return Err(Failure::Config(format!(
                "recall_floor must be in [0, 1], got {f}"
            )));
        }
    }
    let report_path = l.existing(&sec.report)?;
    let truth_path = l.existing(&sec.truth)?;

    let report: Json = serde_json::from_reader(open(&report_path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", report_path.display())))?;
    let (flagged, n_rows) = report_flags(&report)?;
    let truth = read_truth(&truth_path)?;
    if let Some(n) = n_rows {
        if n != truth.len() {
            return Err(Failure::Data(format!(
                "row_id mismatch: report covers {n} rows, truth has {}",
                truth.len()
            )));
        }
    }
    let index: BTreeMap<usize, usize> = truth
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (*id, i))
        .collect();
    let mut flags = vec![false; truth.len()];
    for id in &flagged {
        let i = index.get(id).ok_or_else(|| {
            Failure::Data(format!(
                "row_id mismatch: flagged row {id} is not in the truth file"
            ))
        })?;
        flags[*i] = true;
    }
    let labels: Vec<bool> = truth.iter().map(|(_, t)| *t).collect();
    let result = evaluate(&flags, &labels)?;
    let passed = sec.recall_floor.is_none_or(|f| result.recall >= f);
    let payload = EvalPayload {
        report: &sec.report,
        truth: &sec.truth,
        result,
        recall_floor: sec.recall_floor,
        passed,
    };
    let envelope = ReportEnvelope::new("eval", &l.config, payload, Vec::new())?;

    let mut staging = Staging::new(out)?;
    staging.write("eval_report.json", &json_bytes(&envelope)?)?;
    let files = staging.commit()?;
    let stdout = String::from_utf8(json_bytes(&result)?).expect("json is utf-8");
    let gate = (!passed).then(|| {
        Failure::Gate(format!(
            "recall {} is below the floor {}",
            result.recall,
            sec.recall_floor.unwrap_or_default()
        ))
    });
    Ok(Outcome {
        files,
        stdout: Some(stdout),
        gate,
    })
}
