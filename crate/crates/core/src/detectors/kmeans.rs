//! Seeded K-Means (k-means++ start, Lloyd iterations) on a numeric
//! embedding of mixed data, and the per-attribute centroid distances of a
//! two-cluster solution.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{DetectError, Result};
use crate::tabular::{column_stats, AttributeKind, Dataset, Value};

const KMEANS_STREAM: u64 = 2;

/// Where one source attribute lives in the embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedAttribute {
    pub attribute: String,
    pub kind: AttributeKind,
    pub start: usize,
    pub width: usize,
    /// Indicator labels for nominal attributes.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

/// Numeric attributes as z-scores (missing → 0, the column mean) and
/// nominal attributes as 0/1 indicator blocks (missing → all zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub layout: Vec<EmbeddedAttribute>,
    pub points: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.layout.last().map_or(0, |a| a.start + a.width)
    }
}

pub fn embed(ds: &Dataset) -> Embedding {
    let mut layout = Vec::with_capacity(ds.n_attributes());
    let mut start = 0;
    for (j, attr) in ds.schema().attributes().iter().enumerate() {
        let labels = match attr.kind {
            AttributeKind::Numeric => Vec::new(),
            AttributeKind::Nominal => {
                let mut seen: Vec<String> = Vec::new();
                for v in ds.column(j) {
                    if let Value::Label(s) = v {
                        if !seen.contains(s) {
                            seen.push(s.clone());
                        }
                    }
                }
                seen
            }
        };
        let width = match attr.kind {
            AttributeKind::Numeric => 1,
            AttributeKind::Nominal => labels.len(),
        };
        layout.push(EmbeddedAttribute {
            attribute: attr.name.clone(),
            kind: attr.kind,
            start,
            width,
            labels,
        });
        start += width;
    }
    let dim = start;

    let mut points = vec![vec![0.0; dim]; ds.n_rows()];
    for (j, slot) in layout.iter().enumerate() {
        match slot.kind {
            AttributeKind::Numeric => {
                let stats = column_stats(ds, &slot.attribute).expect("attribute from schema");
                let (Some(mean), Some(sd)) = (stats.mean, stats.std_dev) else {
                    continue;
                };
                for (p, v) in points.iter_mut().zip(ds.column(j)) {
                    if let Value::Number(x) = v {
                        p[slot.start] = if sd > 0.0 { (x - mean) / sd } else { 0.0 };
                    }
                }
            }
            AttributeKind::Nominal => {
                let index: HashMap<&str, usize> = slot
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i))
                    .collect();
                for (p, v) in points.iter_mut().zip(ds.column(j)) {
                    if let Value::Label(s) = v {
                        p[slot.start + index[s.as_str()]] = 1.0;
                    }
                }
            }
        }
    }
    Embedding { layout, points }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub layout: Vec<EmbeddedAttribute>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, sq_dist(point, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > r {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every point coincides with a chosen center
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            inertia += d;
            c
        })
        .collect();
    (labels, inertia)
}

fn update(points: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut empty = Vec::new();
    for c in 0..k {
        if counts[c] == 0 {
            empty.push(c);
        } else {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
    // reseed each empty cluster at the point farthest from its own centroid
    let mut taken: Vec<usize> = Vec::new();
    for c in empty {
        let mut far: Option<(usize, f64)> = None;
        for (i, (p, &l)) in points.iter().zip(labels).enumerate() {
            if taken.contains(&i) {
                continue;
            }
            let d = sq_dist(p, &centroids[l]);
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        if let Some((i, d)) = far {
            if d > 0.0 {
                centroids[c] = points[i].clone();
                taken.push(i);
            }
        }
    }
}

pub fn kmeans(ds: &Dataset, k: usize, seed: u64, max_iter: usize) -> Result<Clustering> {
    kmeans_embedded(&embed(ds), k, seed, max_iter)
}

/// Lloyd's algorithm from a seeded k-means++ start.
///
/// Stops when an assignment step changes nothing or after `max_iter`
/// update steps.
pub fn kmeans_embedded(
    embedding: &Embedding,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Clustering> {
    let points = &embedding.points;
    let n = points.len();
    if k < 1 || k > n {
        return Err(DetectError::InvalidK { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(KMEANS_STREAM);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let (mut labels, mut inertia) = assign(points, &centroids);
    let mut trace = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        update(points, &labels, &mut centroids);
        let (next, next_inertia) = assign(points, &centroids);
        trace.push(next_inertia);
        inertia = next_inertia;
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(Clustering {
        k,
        centroids,
        assignment: labels,
        inertia,
        inertia_trace: trace,
        iterations,
        layout: embedding.layout.clone(),
    })
}

/// Runs `restarts` seeded starts (`seed`, `seed + 1`, ...) and keeps the one
/// with the lowest inertia; ties keep the earliest start.
pub fn kmeans_restarts(
    embedding: &Embedding,
    k: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<Clustering> {
    let mut best = kmeans_embedded(embedding, k, seed, max_iter)?;
    for r in 1..restarts as u64 {
        let c = kmeans_embedded(embedding, k, seed.wrapping_add(r), max_iter)?;
        if c.inertia < best.inertia {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedAttribute {
    pub attribute: String,
    pub distance: f64,
}

/// Attributes ordered by how far apart the two centroids are on them.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AttributeRanking {
    pub entries: Vec<RankedAttribute>,
}

impl AttributeRanking {
    pub fn top(&self) -> Option<&str> {
        self.entries.first().map(|e| e.attribute.as_str())
    }
}

/// Per-attribute gap between the centroids of a two-cluster solution:
/// absolute difference for numeric attributes, Euclidean norm over the
/// indicator block for nominal ones. Sorted by distance, largest first,
/// then by attribute name.
pub fn centroid_attribute_distances(c: &Clustering, ds: &Dataset) -> Result<AttributeRanking> {
    if c.k != 2 {
        return Err(DetectError::NotTwoClusters(c.k));
    }
    let same_schema = c.layout.len() == ds.n_attributes()
        && c.layout
            .iter()
            .zip(ds.schema().attributes())
            .all(|(l, a)| l.attribute == a.name && l.kind == a.kind);
    if !same_schema {
        return Err(DetectError::LayoutMismatch);
    }
    let (a, b) = (&c.centroids[0], &c.centroids[1]);
    let mut entries: Vec<RankedAttribute> = c
        .layout
        .iter()
        .map(|slot| {
            let range = slot.start..slot.start + slot.width;
            let distance = match slot.kind {
                AttributeKind::Numeric => (a[slot.start] - b[slot.start]).abs(),
                AttributeKind::Nominal => sq_dist(&a[range.clone()], &b[range]).sqrt(),
            };
            RankedAttribute {
                attribute: slot.attribute.clone(),
                distance,
            }
        })
        .collect();
    entries.sort_by(|x, y| {
        y.distance
            .total_cmp(&x.distance)
            .then_with(|| x.attribute.cmp(&y.attribute))
    });
    Ok(AttributeRanking { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Schema};

    fn plane(points: &[(f64, f64)]) -> Dataset {
        let schema = Schema::new(vec![Attribute::numeric("x"), Attribute::numeric("y")]).unwrap();
        Dataset::from_rows(
            schema,
            points
                .iter()
                .map(|&(x, y)| vec![Value::Number(x), Value::Number(y)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let ds = plane(&[(0.0, 1.0), (2.0, 5.0), (4.0, 0.0)]);
        let c = kmeans(&ds, 1, 7, 50).unwrap();
        assert!(c.assignment.iter().all(|&a| a == 0));
        let emb = embed(&ds);
        for d in 0..2 {
            let mean = emb.points.iter().map(|p| p[d]).sum::<f64>() / 3.0;
            assert!((c.centroids[0][d] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn one_cluster_per_row_has_zero_inertia() {
        let ds = plane(&[(0.0, 1.0), (2.0, 5.0), (4.0, 0.0), (9.0, 9.0)]);
        let c = kmeans(&ds, 4, 3, 50).unwrap();
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn separated_pairs_any_seed() {
        let ds = plane(&[(0.0, 0.0), (1.0, 0.0), (100.0, 0.0), (101.0, 0.0)]);
        let emb = embed(&ds);
        let mean = |i: usize, j: usize| (emb.points[i][0] + emb.points[j][0]) / 2.0;
        for seed in 0..50 {
            let c = kmeans(&ds, 2, seed, 100).unwrap();
            assert_eq!(c.assignment[0], c.assignment[1]);
            assert_eq!(c.assignment[2], c.assignment[3]);
            assert_ne!(c.assignment[0], c.assignment[2]);
            let low = c.assignment[0];
            assert!((c.centroids[low][0] - mean(0, 1)).abs() < 1e-9);
            assert!((c.centroids[1 - low][0] - mean(2, 3)).abs() < 1e-9);
        }
    }

    #[test]
    fn k_out_of_range() {
        let ds = plane(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(
            kmeans(&ds, 3, 0, 10).unwrap_err(),
            DetectError::InvalidK { k: 3, n: 2 }
        );
        assert!(kmeans(&ds, 0, 0, 10).is_err());
    }

    #[test]
    fn embedding_layout_and_missing_imputation() {
        let schema = Schema::new(vec![Attribute::numeric("x"), Attribute::nominal("c")]).unwrap();
        let ds = Dataset::from_rows(
            schema,
            vec![
                vec![Value::Number(1.0), Value::Label("a".into())],
                vec![Value::Number(3.0), Value::Label("b".into())],
                vec![Value::Missing, Value::Missing],
            ],
        )
        .unwrap();
        let emb = embed(&ds);
        assert_eq!(emb.dim(), 3);
        assert_eq!(emb.points[0], vec![-1.0, 1.0, 0.0]);
        assert_eq!(emb.points[1], vec![1.0, 0.0, 1.0]);
        assert_eq!(emb.points[2], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn ranking_examples() {
        // clusters differ on x only
        let ds = plane(&[(0.0, 5.0), (10.0, 6.0)]);
        let c = Clustering {
            k: 2,
            centroids: vec![vec![-1.0, 0.25], vec![1.0, -0.5]],
            assignment: vec![0, 1],
            inertia: 0.0,
            inertia_trace: vec![],
            iterations: 0,
            layout: embed(&ds).layout,
        };
        let r = centroid_attribute_distances(&c, &ds).unwrap();
        assert_eq!(r.top(), Some("x"));
        assert_eq!(r.entries[0].distance, 2.0);
        assert_eq!(r.entries[1].attribute, "y");
        assert_eq!(r.entries[1].distance, 0.75);

        let tie = Clustering {
            centroids: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            ..c.clone()
        };
        let r = centroid_attribute_distances(&tie, &ds).unwrap();
        assert_eq!(r.top(), Some("x"));

        let single = Dataset::from_rows(
            Schema::new(vec![Attribute::numeric("x")]).unwrap(),
            vec![vec![Value::Number(0.0)], vec![Value::Number(1.0)]],
        )
        .unwrap();
        let c = kmeans(&single, 2, 0, 10).unwrap();
        assert_eq!(
            centroid_attribute_distances(&c, &single)
                .unwrap()
                .entries
                .len(),
            1
        );

        let c3 = Clustering { k: 3, ..c };
        assert_eq!(
            centroid_attribute_distances(&c3, &ds).unwrap_err(),
            DetectError::NotTwoClusters(3)
        );
    }

    #[test]
    fn restarts_never_worse_than_first_start() {
        let pts: Vec<(f64, f64)> = (0..30)
            .map(|i| ((i % 7) as f64 * 1.3, ((i * 5) % 11) as f64 * 0.7))
            .collect();
        let emb = embed(&plane(&pts));
        for seed in 0..10 {
            let one = kmeans_embedded(&emb, 3, seed, 100).unwrap();
            let many = kmeans_restarts(&emb, 3, seed, 100, 8).unwrap();
            assert!(many.inertia <= one.inertia);
            let same = kmeans_restarts(&emb, 3, seed, 100, 1).unwrap();
            assert_eq!(same, one);
        }
    }

    #[test]
    fn inertia_trace_never_increases() {
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let t = i as f64;
                (
                    (t * 7.3) % 11.0,
                    (t * 3.1) % 5.0 + if i % 3 == 0 { 20.0 } else { 0.0 },
                )
            })
            .collect();
        let ds = plane(&pts);
        for seed in 0..20 {
            let c = kmeans(&ds, 4, seed, 100).unwrap();
            for w in c.inertia_trace.windows(2) {
                assert!(
                    w[1] <= w[0] * (1.0 + 1e-12) + 1e-12,
                    "{:?}",
                    c.inertia_trace
                );
            }
        }
    }
}
