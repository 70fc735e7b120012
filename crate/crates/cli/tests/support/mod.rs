#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary with `SOURCE_DATE_EPOCH` cleared.
pub fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_hybrid-audit"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// `hybrid-audit <cmd> --config <dir>/<config> --out <out>`.
pub fn command(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Run {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Every file under `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

pub const PREPARE_TOML: &str = r#"
[input]
data = "raw.csv"

[prepare]
fx = "fx.csv"
cpi = "cpi.csv"
base_year = 2020
keep = ["id", "provincia"]

[prepare.columns]
currency = "moneda"
year = "anio"
value = "monto"
area = "sup"
area_unit = "unidad"
reference = "valuacion"
"#;

/// Four numeric columns `x0..x3` (mean 10 i, std 1 + i) and two nominal
/// ones, with 5% point outliers at 8 std in `x{attr}`.
pub fn ranking_toml(seed: u64, attr: usize) -> String {
    format!(
        r#"
seed = {seed}

[synth]
n_rows = 1000
numeric = [
  {{ name = "x0", mean = 0.0, std = 1.0 }},
  {{ name = "x1", mean = 10.0, std = 2.0 }},
  {{ name = "x2", mean = 20.0, std = 3.0 }},
  {{ name = "x3", mean = 30.0, std = 4.0 }},
]
nominal = [
  {{ name = "c0", labels = ["a", "b", "c"], probabilities = [0.5, 0.3, 0.2] }},
  {{ name = "c1", labels = ["u", "v"], probabilities = [0.6, 0.4] }},
]

[synth.inject]
rate = 0.05
kinds = ["point_outlier"]
magnitude = 8.0
target_attrs = ["x{attr}"]

[input]
data = "synth_data.csv"

[proc2]
"#
    )
}

pub const AFFIDAVIT_TOML: &str = r#"
seed = 0

[synth]
preset = "affidavit"
n_rows = 5000

[synth.inject]
rate = 0.05
kinds = ["point_outlier"]
magnitude = 8.0
target_attrs = ["ddjj_id", "ano", "persona_id", "ingreso", "cant_acciones", "porcentaje", "superficiem2", "valor_patrim"]

[input]
data = "synth_data.csv"

[proc2]

[eval]
report = "proc2_report.json"
truth = "synth_truth.csv"
recall_floor = 0.6
"#;
