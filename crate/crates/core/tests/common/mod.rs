#![allow(dead_code)]

pub mod reference;

use hybrid_audit::synth::{generate, NominalColumn, NumericColumn, SynthPlan};
use hybrid_audit::{Attribute, Dataset, Schema, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small mixed table: two numeric columns, one nominal, a few missing cells
/// and some exact duplicates.
pub fn mixed_fixture(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::new(vec![
        Attribute::numeric("x"),
        Attribute::numeric("y"),
        Attribute::nominal("c"),
    ])
    .unwrap();
    let mut rows: Vec<Vec<Value>> = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.random_bool(0.1) {
            let j = rng.random_range(0..i);
            rows.push(rows[j].clone());
            continue;
        }
        let centre = if rng.random_bool(0.5) { 0.0 } else { 5.0 };
        let x = if rng.random_bool(0.05) {
            Value::Missing
        } else {
            Value::Number(centre + rng.random::<f64>() * 2.0)
        };
        let y = Value::Number((rng.random::<f64>() * 10.0).round() / 2.0);
        let c = if rng.random_bool(0.05) {
            Value::Missing
        } else {
            Value::Label(["a", "b", "c"][rng.random_range(0..3)].to_string())
        };
        rows.push(vec![x, y, c]);
    }
    Dataset::from_rows(schema, rows).unwrap()
}

pub fn numeric_table(names: &[&str], rows: &[Vec<f64>]) -> Dataset {
    let schema = Schema::new(names.iter().map(|n| Attribute::numeric(*n)).collect()).unwrap();
    Dataset::from_rows(
        schema,
        rows.iter()
            .map(|r| r.iter().map(|&x| Value::Number(x)).collect())
            .collect(),
    )
    .unwrap()
}

pub fn nominal_table(names: &[&str], rows: &[&[&str]]) -> Dataset {
    let schema = Schema::new(names.iter().map(|n| Attribute::nominal(*n)).collect()).unwrap();
    Dataset::from_rows(
        schema,
        rows.iter()
            .map(|r| r.iter().map(|s| Value::Label(s.to_string())).collect())
            .collect(),
    )
    .unwrap()
}

/// The classic 14-row play-tennis table, all nominal.
pub fn weather() -> Dataset {
    nominal_table(
        &["outlook", "temperature", "humidity", "windy", "play"],
        &[
            &["sunny", "hot", "high", "false", "no"],
            &["sunny", "hot", "high", "true", "no"],
            &["overcast", "hot", "high", "false", "yes"],
            &["rainy", "mild", "high", "false", "yes"],
            &["rainy", "cool", "normal", "false", "yes"],
            &["rainy", "cool", "normal", "true", "no"],
            &["overcast", "cool", "normal", "true", "yes"],
            &["sunny", "mild", "high", "false", "no"],
            &["sunny", "cool", "normal", "false", "yes"],
            &["rainy", "mild", "normal", "false", "yes"],
            &["sunny", "mild", "normal", "true", "yes"],
            &["overcast", "mild", "high", "true", "yes"],
            &["overcast", "hot", "normal", "false", "yes"],
            &["rainy", "mild", "high", "true", "no"],
        ],
    )
}

/// Two numeric inputs, one nominal input and a binary target `t`, with
/// about 5% of cells missing.
pub fn table_with_target(seed: u64, n: usize) -> Dataset {
    let plan = SynthPlan {
        n_rows: n,
        numeric: vec![
            NumericColumn {
                name: "x".into(),
                mean: 0.0,
                std: 1.0,
            },
            NumericColumn {
                name: "y".into(),
                mean: 50.0,
                std: 10.0,
            },
        ],
        nominal: vec![NominalColumn {
            name: "c".into(),
            labels: vec!["a".into(), "b".into(), "c".into()],
            probabilities: vec![0.6, 0.3, 0.1],
        }],
        target: Some(NominalColumn {
            name: "t".into(),
            labels: vec!["yes".into(), "no".into()],
            probabilities: vec![0.7, 0.3],
        }),
        seed,
    };
    let ds = generate(&plan).unwrap();
    // sprinkle missing cells so complete-case filtering matters
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let rows = ds
        .rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| {
                    if rng.random_bool(0.05) {
                        Value::Missing
                    } else {
                        v.clone()
                    }
                })
                .collect()
        })
        .collect();
    Dataset::from_rows(ds.schema().clone(), rows).unwrap()
}

pub fn unlabeled(seed: u64) -> Dataset {
    let ds = table_with_target(seed, 60);
    ds.without_column("t").unwrap()
}

// Ten raw rows in mixed currencies and area units, prepared against small
// FX and CPI tables. Every expected cell was worked out by hand.

pub const PREP_RAW: &str = "\
id,moneda,anio,monto,sup,unidad,valuacion,provincia
1,ARS,2020,1000,2,ha,1000,Cordoba
2,USD,2020,500,150,m2,600,Salta
3,USD,2019,250,0.5,ha,200,Jujuy
4,EUR,2020,10,1,km2,10,Chubut
5,ARS,2019,300,1000,ft2,900,Chaco
6,ARS,2020,0,100,m2,500,Salta
7,USD,2020,,100,m2,500,Tucuman
8,GBP,2020,100,100,m2,100,Neuquen
9,USD,2020,1,1,ha,,Mendoza
10,ars,2020,95,10,M2,100,Misiones
";

pub const PREP_FX: &str = "\
currency,year,rate
USD,2019,40
USD,2020,80
EUR,2020,100
";

pub const PREP_CPI: &str = "\
year,index
2019,50
2020,100
";

// 1: 1000 ARS at base year; 2 ha; 1000/1000 = 1
// 2: 500 * 80; 150 m2; 500/600 < 0.9
// 3: 250 * 40 * 100/50; 0.5 ha; 250/200 > 1.1
// 4: 10 * 100; 1 km2; 10/10
// 5: 300 * 100/50; 1000 * 0.09290304 m2; 300/900 < 0.9
// 6: zero declaration
// 7: no declaration
// 8: no GBP rate, so no value; 100/100 still classifies
// 9: 1 * 80; 1 ha; no reference
// 10: lower-case currency and unit; 95/100 within tolerance
pub const PREP_EXPECTED: &str = "\
row_id,id,provincia,superficiem2,valor_patrim,val_decl
0,1,Cordoba,20000,1000,Fiscal
1,2,Salta,150,40000,Subfiscal
2,3,Jujuy,5000,20000,Market
3,4,Chubut,1000000,1000,Fiscal
4,5,Chaco,92.90304,600,Subfiscal
5,6,Salta,100,0,NotDeclared
6,7,Tucuman,100,,NotDeclared
7,8,Neuquen,100,,Fiscal
8,9,Mendoza,10000,80,NotDeclared
9,10,Misiones,10,95,Fiscal
";
