//! C4.5 decision-tree induction with gain-ratio splits, midpoint numeric
//! thresholds and error-based (pessimistic) pruning.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use super::{score_attribute, CandidateSplit, Classes, LearnError, Result};
use crate::tabular::{AttributeKind, Dataset, Value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C45Params {
    /// Minimum number of known rows in at least two branches of a split.
    pub min_leaf: usize,
    /// Minimum information gain (bits) for an attribute to qualify.
    pub min_gain: f64,
    /// Pruning confidence; `None` disables pruning.
    pub confidence: Option<f64>,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params {
            min_leaf: 2,
            min_gain: 0.0,
            confidence: Some(0.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitKind {
    /// One child per label, in the same order.
    Nominal { labels: Vec<String> },
    /// Child 0 takes `value <= threshold`, child 1 the rest.
    Threshold { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: String,
        /// Training rows reaching this leaf.
        support: usize,
        /// Training rows at this leaf not of class `label`.
        errors: usize,
        purity: f64,
    },
    Split {
        attribute: String,
        #[serde(skip)]
        index: usize,
        split: SplitKind,
        children: Vec<Node>,
        /// Child receiving rows whose value is missing.
        missing_branch: usize,
        /// Majority class here, used for labels never seen in training.
        majority: String,
        support: usize,
    },
}

impl Node {
    pub fn support(&self) -> usize {
        match self {
            Node::Leaf { support, .. } | Node::Split { support, .. } => *support,
        }
    }

    pub fn leaves(&self) -> Vec<&Node> {
        match self {
            Node::Leaf { .. } => vec![self],
            Node::Split { children, .. } => children.iter().flat_map(Node::leaves).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionTree {
    pub target: String,
    pub classes: Vec<String>,
    pub root: Node,
}

impl DecisionTree {
    pub fn predict(&self, row: &[Value]) -> &str {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return label,
                Node::Split {
                    index,
                    split,
                    children,
                    missing_branch,
                    majority,
                    ..
                } => {
                    let next = match (&row[*index], split) {
                        (Value::Missing, _) => Some(*missing_branch),
                        (Value::Number(x), SplitKind::Threshold { threshold }) => {
                            Some(if *x <= *threshold { 0 } else { 1 })
                        }
                        (Value::Label(s), SplitKind::Nominal { labels }) => {
                            labels.iter().position(|l| l == s)
                        }
                        _ => None,
                    };
                    match next {
                        Some(i) => node = &children[i],
                        None => return majority,
                    }
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.root.leaves().len()
    }
}

/// Upper limit of the one-sided binomial confidence interval for the error
/// rate after observing `errors` mistakes in `n` trials.
pub(crate) fn pessimistic_rate(errors: usize, n: usize, confidence: f64) -> f64 {
    if errors >= n {
        return 1.0;
    }
    let (e, n) = (errors as f64, n as f64);
    // P[X <= e | p] = I_{1-p}(n - e, e + 1), decreasing in p
    let cdf = |p: f64| beta_reg(n - e, e + 1.0, 1.0 - p);
    let (mut lo, mut hi) = (e / n, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) > confidence {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    ds: &'a Dataset,
    classes: Classes,
    params: C45Params,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let counts = self.classes.counts(rows);
        let m = majority(&counts);
        Node::Leaf {
            label: self.classes.labels[m].clone(),
            support: rows.len(),
            errors: rows.len() - counts[m],
            purity: counts[m] as f64 / rows.len() as f64,
        }
    }

    fn grow(&self, rows: &[usize], used_nominal: &mut Vec<usize>) -> Node {
        let counts = self.classes.counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.params.min_leaf {
            return self.leaf(rows);
        }

        let mut best: Option<(usize, super::Candidate)> = None;
        for j in 0..self.ds.n_attributes() {
            if j == self.classes.target || used_nominal.contains(&j) {
                continue;
            }
            let c = score_attribute(self.ds, &self.classes, rows, j, self.params.min_leaf);
            if matches!(c.split, CandidateSplit::None)
                || c.gain <= 1e-12
                || c.gain < self.params.min_gain
            {
                continue;
            }
            if best
                .as_ref()
                .is_none_or(|(_, b)| c.gain_ratio > b.gain_ratio)
            {
                best = Some((j, c));
            }
        }
        let Some((j, candidate)) = best else {
            return self.leaf(rows);
        };

        let (split, mut parts) = match candidate.split {
            CandidateSplit::Nominal(branches) => {
                let labels = branches.iter().map(|(l, _)| l.clone()).collect();
                let parts: Vec<Vec<usize>> = branches.into_iter().map(|(_, r)| r).collect();
                (SplitKind::Nominal { labels }, parts)
            }
            CandidateSplit::Threshold { threshold, le, gt } => {
                (SplitKind::Threshold { threshold }, vec![le, gt])
            }
            CandidateSplit::None => unreachable!("filtered above"),
        };
        let mut missing_branch = 0;
        for (i, p) in parts.iter().enumerate() {
            if p.len() > parts[missing_branch].len() {
                missing_branch = i;
            }
        }
        let missing: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| self.ds.cell(r, j).is_missing())
            .collect();
        if !missing.is_empty() {
            let target = &mut parts[missing_branch];
            target.extend(missing);
            target.sort_unstable();
        }

        let is_nominal = self.ds.schema().attribute(j).kind == AttributeKind::Nominal;
        if is_nominal {
            used_nominal.push(j);
        }
        let children = parts.iter().map(|p| self.grow(p, used_nominal)).collect();
        if is_nominal {
            used_nominal.pop();
        }
        Node::Split {
            attribute: self.ds.schema().attribute(j).name.clone(),
            index: j,
            split,
            children,
            missing_branch,
            majority: self.classes.labels[majority(&counts)].clone(),
            support: rows.len(),
        }
    }

    /// Bottom-up pruning; returns the node and its estimated error count.
    fn prune(&self, node: Node, rows: &[usize], confidence: f64) -> (Node, f64) {
        let estimate = |n: usize, e: usize| n as f64 * pessimistic_rate(e, n, confidence);
        match node {
            Node::Leaf {
                support, errors, ..
            } => {
                let est = estimate(support, errors);
                (node, est)
            }
            Node::Split {
                attribute,
                index,
                split,
                children,
                missing_branch,
                majority,
                support,
            } => {
                let parts = self.route(rows, index, &split, missing_branch);
                let mut subtree_est = 0.0;
                let mut pruned = Vec::with_capacity(children.len());
                for (child, part) in children.into_iter().zip(&parts) {
                    let (c, est) = self.prune(child, part, confidence);
                    subtree_est += est;
                    pruned.push(c);
                }
                let leaf = self.leaf(rows);
                let Node::Leaf { errors, .. } = leaf else {
                    unreachable!()
                };
                let leaf_est = estimate(rows.len(), errors);
                if leaf_est <= subtree_est + 1e-12 {
                    (leaf, leaf_est)
                } else {
                    let node = Node::Split {
                        attribute,
                        index,
                        split,
                        children: pruned,
                        missing_branch,
                        majority,
                        support,
                    };
                    (node, subtree_est)
                }
            }
        }
    }

    fn route(
        &self,
        rows: &[usize],
        index: usize,
        split: &SplitKind,
        missing_branch: usize,
    ) -> Vec<Vec<usize>> {
        let n_children = match split {
            SplitKind::Nominal { labels } => labels.len(),
            SplitKind::Threshold { .. } => 2,
        };
        let mut parts = vec![Vec::new(); n_children];
        for &r in rows {
            let b = match (self.ds.cell(r, index), split) {
                (Value::Number(x), SplitKind::Threshold { threshold }) => {
                    if *x <= *threshold {
                        0
                    } else {
                        1
                    }
                }
                (Value::Label(s), SplitKind::Nominal { labels }) => {
                    labels.iter().position(|l| l == s).unwrap_or(missing_branch)
                }
                _ => missing_branch,
            };
            parts[b].push(r);
        }
        parts
    }
}

/// Induces a C4.5 tree predicting the nominal `target`.
///
/// Rows with a missing target are not used for training. Rows missing the
/// split attribute follow the branch with the most known rows.
pub fn c45_build(ds: &Dataset, target: &str, params: C45Params) -> Result<DecisionTree> {
    if params.min_leaf < 1 {
        return Err(LearnError::InvalidParameter(
            "min_leaf must be at least 1".into(),
        ));
    }
    if let Some(cf) = params.confidence {
        if !(cf > 0.0 && cf < 1.0) {
            return Err(LearnError::InvalidParameter(
                "pruning confidence must lie in (0, 1)".into(),
            ));
        }
    }
    let classes = Classes::new(ds, target)?;
    let rows = classes.training_rows();
    if rows.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let builder = Builder {
        ds,
        classes,
        params,
    };
    let mut root = builder.grow(&rows, &mut Vec::new());
    if let Some(cf) = params.confidence {
        root = builder.prune(root, &rows, cf).0;
    }
    Ok(DecisionTree {
        target: target.to_string(),
        classes: builder.classes.labels,
        root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Schema};
    use proptest::prelude::*;

    fn xy(points: &[(f64, &str)]) -> Dataset {
        let schema = Schema::new(vec![Attribute::numeric("x"), Attribute::nominal("y")]).unwrap();
        let rows = points
            .iter()
            .map(|(x, y)| vec![Value::Number(*x), Value::Label(y.to_string())])
            .collect();
        Dataset::from_rows(schema, rows).unwrap()
    }

    #[test]
    fn pure_target_gives_single_leaf() {
        let ds = xy(&[(1.0, "a"), (2.0, "a"), (3.0, "a")]);
        let tree = c45_build(&ds, "y", C45Params::default()).unwrap();
        match tree.root {
            Node::Leaf {
                purity, support, ..
            } => {
                assert_eq!(purity, 1.0);
                assert_eq!(support, 3);
            }
            _ => panic!("expected a leaf"),
        }
    }

    #[test]
    fn separable_threshold_inside_margin() {
        let pts: Vec<(f64, &str)> = [1.0, 2.0, 3.0, 4.0, 5.0, 9.0, 10.0, 11.0, 12.0]
            .iter()
            .map(|&x| (x, if x <= 5.0 { "low" } else { "high" }))
            .collect();
        let ds = xy(&pts);
        let tree = c45_build(&ds, "y", C45Params::default()).unwrap();
        let Node::Split {
            split: SplitKind::Threshold { threshold },
            children,
            ..
        } = &tree.root
        else {
            panic!("expected a threshold split, got {:?}", tree.root);
        };
        assert!(*threshold > 5.0 && *threshold < 9.0);
        assert_eq!(*threshold, 7.0);
        assert!(children
            .iter()
            .all(|c| matches!(c, Node::Leaf { purity, .. } if *purity == 1.0)));
        for (i, row) in ds.rows().iter().enumerate() {
            assert_eq!(tree.predict(row), ds.cell(i, 1).as_label().unwrap());
        }
    }

    #[test]
    fn numeric_attribute_can_be_retested() {
        // a middle band of one class needs two thresholds on x
        let mut pts = Vec::new();
        for x in 0..30 {
            let y = if (10..20).contains(&x) { "mid" } else { "out" };
            pts.push((x as f64, y));
        }
        let ds = xy(&pts);
        let tree = c45_build(&ds, "y", C45Params::default()).unwrap();
        let correct = ds
            .rows()
            .iter()
            .enumerate()
            .filter(|(i, r)| tree.predict(r) == ds.cell(*i, 1).as_label().unwrap())
            .count();
        assert_eq!(correct, 30);
        assert_eq!(tree.n_leaves(), 3);
    }

    #[test]
    fn empty_and_bad_params() {
        let ds = xy(&[]);
        assert_eq!(
            c45_build(&ds, "y", C45Params::default()).unwrap_err(),
            LearnError::EmptyDataset
        );
        let ds = xy(&[(1.0, "a")]);
        let bad = C45Params {
            min_leaf: 0,
            ..Default::default()
        };
        assert!(c45_build(&ds, "y", bad).is_err());
    }

    #[test]
    fn pessimistic_rate_matches_closed_forms() {
        // zero errors: 1 - cf^(1/n)
        for n in [1usize, 5, 16, 100] {
            let expect = 1.0 - 0.25f64.powf(1.0 / n as f64);
            assert!((pessimistic_rate(0, n, 0.25) - expect).abs() < 1e-12);
        }
        // one error in two trials: solve (1-p)^2 + 2p(1-p) = 0.25  =>  1 - p^2 = 0.25
        assert!((pessimistic_rate(1, 2, 0.25) - 0.75f64.sqrt()).abs() < 1e-12);
        assert_eq!(pessimistic_rate(3, 3, 0.25), 1.0);
    }

    #[test]
    fn pruning_collapses_noise_split() {
        // one mislabeled point inside a big pure region is not worth a split
        let mut pts: Vec<(f64, &str)> = (0..40).map(|x| (x as f64, "a")).collect();
        pts[20].1 = "b";
        let ds = xy(&pts);
        let unpruned = c45_build(
            &ds,
            "y",
            C45Params {
                confidence: None,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(unpruned.n_leaves() > 1);
        let pruned = c45_build(&ds, "y", C45Params::default()).unwrap();
        assert_eq!(pruned.n_leaves(), 1);
    }

    #[test]
    fn missing_split_values_follow_the_largest_branch() {
        let schema = Schema::new(vec![Attribute::numeric("x"), Attribute::nominal("y")]).unwrap();
        let mut rows: Vec<Vec<Value>> = (0..10)
            .map(|x| {
                vec![
                    Value::Number(x as f64),
                    Value::Label(if x < 6 { "a" } else { "b" }.into()),
                ]
            })
            .collect();
        rows.push(vec![Value::Missing, Value::Label("a".into())]);
        let ds = Dataset::from_rows(schema, rows).unwrap();
        let tree = c45_build(
            &ds,
            "y",
            C45Params {
                confidence: None,
                ..Default::default()
            },
        )
        .unwrap();
        let total: usize = tree.root.leaves().iter().map(|l| l.support()).sum();
        assert_eq!(total, 11);
        assert_eq!(tree.predict(&[Value::Missing, Value::Missing]), "a");
    }

    proptest! {
        #[test]
        fn beats_majority_baseline_and_supports_sum(
            rows in proptest::collection::vec((0u8..4, -5i32..5, 0u8..3), 1..60),
            prune in any::<bool>(),
        ) {
            let schema = Schema::new(vec![
                Attribute::nominal("a"),
                Attribute::numeric("x"),
                Attribute::nominal("t"),
            ]).unwrap();
            let data: Vec<Vec<Value>> = rows.iter().map(|&(a, x, t)| vec![
                Value::Label(format!("a{a}")),
                Value::Number(x as f64),
                Value::Label(format!("t{t}")),
            ]).collect();
            let ds = Dataset::from_rows(schema, data).unwrap();
            let params = C45Params {
                confidence: prune.then_some(0.25),
                ..Default::default()
            };
            let tree = c45_build(&ds, "t", params).unwrap();
            let supports: usize = tree.root.leaves().iter().map(|l| l.support()).sum();
            prop_assert_eq!(supports, ds.n_rows());

            let correct = (0..ds.n_rows())
                .filter(|&i| tree.predict(ds.row(i)) == ds.cell(i, 2).as_label().unwrap())
                .count();
            let mut counts = std::collections::HashMap::new();
            for (_, _, t) in &rows {
                *counts.entry(t).or_insert(0usize) += 1;
            }
            let baseline = *counts.values().max().unwrap();
            prop_assert!(correct >= baseline);
        }
    }
}
