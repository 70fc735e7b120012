//! Detectors and information measures against brute-force references.

mod common;

use std::time::Instant;

use common::reference::{
    dbscan_reference, gower_matrix, kmeans_reference, lof_reference, nominal_gains,
};
use common::{mixed_fixture, weather};
use hybrid_audit::detectors::{dbscan, kmeans, lof_scores, DbscanLabel};
use hybrid_audit::learners::{attribute_scores, entropy};

const FIXTURES: u64 = 24;

fn fixture_size(seed: u64) -> usize {
    16 + (seed as usize * 7) % 49
}

#[test]
fn lof_matches_reference() {
    let start = Instant::now();
    for seed in 0..FIXTURES {
        let ds = mixed_fixture(seed, fixture_size(seed));
        let d = gower_matrix(&ds);
        for k in [1, 3, 5, 10] {
            let got = lof_scores(&ds, k).unwrap();
            let want = lof_reference(&d, k);
            for (i, (g, w)) in got.scores.iter().zip(&want).enumerate() {
                assert!(
                    (g - w).abs() <= 1e-9 * w.abs().max(1.0),
                    "seed {seed} k {k} row {i}: {g} vs {w}"
                );
            }
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn dbscan_matches_reference() {
    let start = Instant::now();
    for seed in 0..FIXTURES {
        let ds = mixed_fixture(seed, fixture_size(seed));
        let d = gower_matrix(&ds);
        for (eps, min_pts) in [(0.05, 3), (0.1, 4), (0.15, 5), (0.3, 8)] {
            let got: Vec<Option<usize>> = dbscan(&ds, eps, min_pts)
                .unwrap()
                .labels
                .iter()
                .map(|l| match l {
                    DbscanLabel::Cluster(c) => Some(*c),
                    DbscanLabel::Noise => None,
                })
                .collect();
            assert_eq!(
                got,
                dbscan_reference(&d, eps, min_pts),
                "seed {seed} eps {eps}"
            );
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn kmeans_matches_reference() {
    let start = Instant::now();
    for seed in 0..FIXTURES {
        let ds = mixed_fixture(seed, fixture_size(seed));
        for k in [1, 2, 3, 5] {
            let got = kmeans(&ds, k, seed, 100).unwrap();
            let want = kmeans_reference(&ds, k, seed, 100);
            assert_eq!(got.assignment, want.assignment, "seed {seed} k {k}");
            assert!(
                (got.inertia - want.inertia).abs() <= 1e-9 * want.inertia.max(1.0),
                "seed {seed} k {k}: {} vs {}",
                got.inertia,
                want.inertia
            );
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn entropy_of_nine_five() {
    let h = entropy(&[9, 5]).unwrap();
    assert!((h - 0.9403).abs() < 1e-4, "{h}");
}

#[test]
fn weather_gains_match_partition_oracle() {
    let ds = weather();
    let scores = attribute_scores(&ds, "play").unwrap();
    assert_eq!(scores.len(), 4);
    for (name, gain) in nominal_gains(&ds, 4) {
        let got = scores.iter().find(|s| s.attribute == name).unwrap();
        assert!(
            (got.gain - gain).abs() < 1e-9,
            "{name}: {} vs {gain}",
            got.gain
        );
    }
    let outlook = scores.iter().find(|s| s.attribute == "outlook").unwrap();
    assert!((outlook.gain - 0.2467).abs() < 1e-4);
    assert_eq!(scores[0].attribute, "outlook");
}
