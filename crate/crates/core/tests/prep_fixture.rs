//! The ten-row preparation fixture and the declared-value rule.

mod common;

use hybrid_audit::prep::{
    classify_declared_value, homogenize_area, prepare, AreaUnit, ColumnRoles, CpiTable,
    DeclaredValue, FxTable, PrepConfig,
};
use hybrid_audit::tabular::{load_csv, write_csv, LoadOptions};

use common::{PREP_CPI, PREP_EXPECTED, PREP_FX, PREP_RAW};

fn config() -> PrepConfig {
    let mut cfg = PrepConfig::new(ColumnRoles {
        currency: "moneda".into(),
        year: "anio".into(),
        value: "monto".into(),
        area: "sup".into(),
        area_unit: Some("unidad".into()),
        reference: "valuacion".into(),
    });
    cfg.keep = Some(vec!["id".into(), "provincia".into()]);
    cfg
}

#[test]
fn ten_row_fixture_is_byte_exact() {
    let raw = load_csv(PREP_RAW.as_bytes(), &LoadOptions::default()).unwrap();
    let fx = FxTable::from_csv(PREP_FX.as_bytes()).unwrap();
    let cpi = CpiTable::from_csv(PREP_CPI.as_bytes(), 2020).unwrap();
    let out = prepare(&raw, &config(), &fx, &cpi).unwrap();
    let mut buf = Vec::new();
    write_csv(&out.data, &mut buf, true).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), PREP_EXPECTED);

    let kinds: Vec<(usize, &str)> = out
        .log
        .iter()
        .map(|w| (w.row_id, w.kind.as_str()))
        .collect();
    assert_eq!(
        kinds,
        vec![(7, "value_not_converted"), (8, "declared_value")]
    );
    assert_eq!(out.summary.rows, 10);
    assert_eq!(out.summary.values_converted, 8);
    assert_eq!(out.summary.areas_converted, 10);
    assert_eq!(out.summary.declared["Fiscal"], 4);
    assert_eq!(out.summary.declared["Subfiscal"], 2);
    assert_eq!(out.summary.declared["Market"], 1);
    assert_eq!(out.summary.declared["NotDeclared"], 3);
}

#[test]
fn area_factors_are_exact() {
    assert_eq!(homogenize_area(2.0, AreaUnit::Ha).unwrap(), 20_000.0);
    assert_eq!(homogenize_area(1.0, AreaUnit::Ft2).unwrap(), 0.09290304);
    assert_eq!(homogenize_area(3.0, AreaUnit::Km2).unwrap(), 3_000_000.0);
    assert_eq!(homogenize_area(7.5, AreaUnit::M2).unwrap(), 7.5);
    assert!(homogenize_area(-1.0, AreaUnit::M2).is_err());
}

#[test]
fn classification_is_total_over_a_sweep() {
    let amounts = [
        None,
        Some(0.0),
        Some(1.0),
        Some(89.0),
        Some(90.0),
        Some(100.0),
        Some(110.0),
        Some(111.0),
        Some(1e12),
    ];
    let tolerances = [0.01, 0.1, 0.5, 0.99];
    for &d in &amounts {
        for &r in &amounts {
            for &t in &tolerances {
                let c = classify_declared_value(d, r, t).unwrap();
                match (d, r) {
                    (None, _) | (Some(0.0), _) => assert_eq!(c.label, DeclaredValue::NotDeclared),
                    (Some(_), None) => {
                        assert_eq!(c.label, DeclaredValue::NotDeclared);
                        assert!(c.warning.is_some());
                    }
                    (Some(_), Some(0.0)) => assert_eq!(c.label, DeclaredValue::Market),
                    (Some(a), Some(b)) => {
                        let ratio = a / b;
                        let want = if ratio < 1.0 - t {
                            DeclaredValue::Subfiscal
                        } else if ratio > 1.0 + t {
                            DeclaredValue::Market
                        } else {
                            DeclaredValue::Fiscal
                        };
                        assert_eq!(c.label, want, "{a} vs {b} at {t}");
                    }
                }
            }
        }
    }
    for t in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(classify_declared_value(Some(1.0), Some(1.0), t).is_err());
    }
}
