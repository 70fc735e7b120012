//! Brute-force reference implementations.

use hybrid_audit::detectors::LRD_CAP;
use hybrid_audit::{Dataset, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise Gower distances written out directly.
pub fn gower_matrix(ds: &Dataset) -> Vec<Vec<f64>> {
    let m = ds.n_attributes();
    let mut ranges = vec![0.0; m];
    for (j, r) in ranges.iter_mut().enumerate() {
        let xs: Vec<f64> = ds.column(j).filter_map(|v| v.as_number()).collect();
        if !xs.is_empty() {
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            *r = hi - lo;
        }
    }
    let n = ds.n_rows();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let (mut sum, mut used) = (0.0, 0usize);
            for j in 0..m {
                match (ds.cell(i, j), ds.cell(k, j)) {
                    (Value::Number(a), Value::Number(b)) => {
                        sum += if ranges[j] > 0.0 {
                            (a - b).abs() / ranges[j]
                        } else {
                            0.0
                        };
                        used += 1;
                    }
                    (Value::Label(a), Value::Label(b)) => {
                        sum += if a == b { 0.0 } else { 1.0 };
                        used += 1;
                    }
                    _ => {}
                }
            }
            d[i][k] = if used == 0 { 0.0 } else { sum / used as f64 };
        }
    }
    d
}

pub fn lof_reference(d: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = d.len();
    let mut kdist = vec![0.0; n];
    let mut hood: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..n {
        let mut others: Vec<f64> = (0..n).filter(|&q| q != p).map(|q| d[p][q]).collect();
        others.sort_by(f64::total_cmp);
        kdist[p] = others[k - 1];
        hood[p] = (0..n).filter(|&q| q != p && d[p][q] <= kdist[p]).collect();
    }
    let mut lrd = vec![0.0; n];
    let mut flat = vec![false; n];
    for p in 0..n {
        let mean = hood[p]
            .iter()
            .map(|&o| {
                if kdist[o] > d[p][o] {
                    kdist[o]
                } else {
                    d[p][o]
                }
            })
            .sum::<f64>()
            / hood[p].len() as f64;
        if mean == 0.0 {
            flat[p] = true;
            lrd[p] = LRD_CAP;
        } else {
            lrd[p] = f64::min(1.0 / mean, LRD_CAP);
        }
    }
    (0..n)
        .map(|p| {
            if flat[p] {
                1.0
            } else {
                hood[p].iter().map(|&o| lrd[o] / lrd[p]).sum::<f64>() / hood[p].len() as f64
            }
        })
        .collect()
}

/// Cluster ids ordered by each component's lowest core row; border rows
/// take the cluster of their lowest core neighbour.
pub fn dbscan_reference(d: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = d.len();
    let core: Vec<bool> = (0..n)
        .map(|p| (0..n).filter(|&q| d[p][q] <= eps).count() >= min_pts)
        .collect();
    // component root = smallest core index reachable through core rows
    let mut root: Vec<usize> = (0..n).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for p in 0..n {
            for q in 0..n {
                if core[p] && core[q] && d[p][q] <= eps && root[q] < root[p] {
                    root[p] = root[q];
                    changed = true;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).filter(|&p| core[p]).map(|p| root[p]).collect();
    roots.sort_unstable();
    roots.dedup();
    let id = |p: usize| roots.binary_search(&root[p]).ok();
    (0..n)
        .map(|p| {
            if core[p] {
                id(p)
            } else {
                (0..n).find(|&q| core[q] && d[p][q] <= eps).and_then(id)
            }
        })
        .collect()
}

pub struct Reference {
    pub assignment: Vec<usize>,
    pub inertia: f64,
}

pub fn embed_reference(ds: &Dataset) -> Vec<Vec<f64>> {
    let n = ds.n_rows();
    let mut cols: Vec<Vec<Vec<f64>>> = Vec::new();
    for j in 0..ds.n_attributes() {
        let cells: Vec<&Value> = ds.column(j).collect();
        if cells.iter().any(|v| matches!(v, Value::Label(_))) {
            let mut labels: Vec<&str> = Vec::new();
            for v in &cells {
                if let Value::Label(s) = v {
                    if !labels.contains(&s.as_str()) {
                        labels.push(s);
                    }
                }
            }
            cols.push(
                cells
                    .iter()
                    .map(|v| {
                        labels
                            .iter()
                            .map(|l| if v.as_label() == Some(l) { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect(),
            );
        } else {
            let xs: Vec<f64> = cells.iter().filter_map(|v| v.as_number()).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
            cols.push(
                cells
                    .iter()
                    .map(|v| match v.as_number() {
                        Some(x) if sd > 0.0 => vec![(x - mean) / sd],
                        _ => vec![0.0],
                    })
                    .collect(),
            );
        }
    }
    (0..n)
        .map(|i| cols.iter().flat_map(|c| c[i].iter().copied()).collect())
        .collect()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

pub fn kmeans_reference(ds: &Dataset, k: usize, seed: u64, max_iter: usize) -> Reference {
    let pts = embed_reference(ds);
    let n = pts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut chosen = vec![rng.random_range(0..n)];
    while chosen.len() < k {
        let w: Vec<f64> = pts
            .iter()
            .map(|p| {
                chosen
                    .iter()
                    .map(|&c| sq(p, &pts[c]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = w.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut last = 0;
            let mut pick = None;
            for (i, &wi) in w.iter().enumerate() {
                if wi > 0.0 {
                    acc += wi;
                    last = i;
                    if acc > target {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last)
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
    }
    let mut centres: Vec<Vec<f64>> = chosen.iter().map(|&i| pts[i].clone()).collect();
    let nearest = |centres: &[Vec<f64>], p: &[f64]| {
        let mut best = 0;
        for c in 1..centres.len() {
            if sq(p, &centres[c]) < sq(p, &centres[best]) {
                best = c;
            }
        }
        best
    };
    let mut labels: Vec<usize> = pts.iter().map(|p| nearest(&centres, p)).collect();
    for _ in 0..max_iter {
        let mut emptied = Vec::new();
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = pts
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                emptied.push(c);
                continue;
            }
            for (j, x) in centre.iter_mut().enumerate() {
                *x = members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64;
            }
        }
        let mut used = Vec::new();
        for c in emptied {
            let far = (0..n)
                .filter(|i| !used.contains(i))
                .map(|i| (i, sq(&pts[i], &centres[labels[i]])))
                .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
                    Some((_, bd)) if bd >= d => acc,
                    _ => Some((i, d)),
                });
            if let Some((i, d)) = far {
                if d > 0.0 {
                    centres[c] = pts[i].clone();
                    used.push(i);
                }
            }
        }
        let next: Vec<usize> = pts.iter().map(|p| nearest(&centres, p)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = pts
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq(p, &centres[l]))
        .sum();
    Reference {
        assignment: labels,
        inertia,
    }
}

pub fn partition_entropy(groups: &[Vec<&str>]) -> f64 {
    let total: usize = groups.iter().map(Vec::len).sum();
    groups
        .iter()
        .map(|g| {
            let mut labels: Vec<&str> = g.clone();
            labels.sort_unstable();
            labels.dedup();
            let h: f64 = labels
                .iter()
                .map(|l| {
                    let p = g.iter().filter(|x| *x == l).count() as f64 / g.len() as f64;
                    -p * p.log2()
                })
                .sum();
            g.len() as f64 / total as f64 * h
        })
        .sum()
}

/// Information gain of every nominal attribute against column `target`,
/// straight from the partition entropies.
pub fn nominal_gains(ds: &Dataset, target: usize) -> Vec<(String, f64)> {
    let n = ds.n_rows();
    let class: Vec<&str> = ds.column(target).map(|v| v.as_label().unwrap()).collect();
    let base = partition_entropy(&[class.clone()]);
    (0..ds.n_attributes())
        .filter(|&j| j != target)
        .map(|j| {
            let cells: Vec<&str> = ds.column(j).map(|v| v.as_label().unwrap()).collect();
            let mut values = cells.clone();
            values.sort_unstable();
            values.dedup();
            let groups: Vec<Vec<&str>> = values
                .iter()
                .map(|v| {
                    (0..n)
                        .filter(|&i| cells[i] == *v)
                        .map(|i| class[i])
                        .collect()
                })
                .collect();
            (
                ds.schema().attribute(j).name.clone(),
                base - partition_entropy(&groups),
            )
        })
        .collect()
}
