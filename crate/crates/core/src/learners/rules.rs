//! Classification rules and their extraction from decision trees.

use std::fmt;

use serde::Serialize;

use super::c45::{DecisionTree, Node, SplitKind};
use super::{LearnError, Result};
use crate::tabular::{Dataset, Value};

/// One test in a rule antecedent.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Condition {
    /// `attribute = value`.
    Equals {
        attribute: String,
        #[serde(skip)]
        index: usize,
        value: String,
    },
    /// `above < attribute <= at_most`, either side optional.
    Range {
        attribute: String,
        #[serde(skip)]
        index: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        above: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        at_most: Option<f64>,
    },
}

impl Condition {
    pub fn attribute(&self) -> &str {
        match self {
            Condition::Equals { attribute, .. } | Condition::Range { attribute, .. } => attribute,
        }
    }

    fn index(&self) -> usize {
        match self {
            Condition::Equals { index, .. } | Condition::Range { index, .. } => *index,
        }
    }

    /// Missing values never satisfy a condition.
    pub fn matches(&self, row: &[Value]) -> bool {
        match (self, &row[self.index()]) {
            (Condition::Equals { value, .. }, Value::Label(s)) => s == value,
            (Condition::Range { above, at_most, .. }, Value::Number(x)) => {
                above.is_none_or(|a| *x > a) && at_most.is_none_or(|b| *x <= b)
            }
            _ => false,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Equals {
                attribute, value, ..
            } => write!(f, "{attribute} = {value}"),
            Condition::Range {
                attribute,
                above,
                at_most,
                ..
            } => match (above, at_most) {
                (Some(a), Some(b)) => write!(f, "{a} < {attribute} <= {b}"),
                (Some(a), None) => write!(f, "{attribute} > {a}"),
                (None, Some(b)) => write!(f, "{attribute} <= {b}"),
                (None, None) => write!(f, "{attribute} is present"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rule {
    pub antecedent: Vec<Condition>,
    pub consequent: String,
    /// Rows satisfying the antecedent.
    pub coverage: usize,
    /// Covered rows whose class is the consequent.
    pub correct: usize,
    pub accuracy: f64,
}

impl Rule {
    pub(crate) fn new(
        antecedent: Vec<Condition>,
        consequent: String,
        coverage: usize,
        correct: usize,
    ) -> Self {
        let accuracy = if coverage == 0 {
            0.0
        } else {
            correct as f64 / coverage as f64
        };
        Rule {
            antecedent,
            consequent,
            coverage,
            correct,
            accuracy,
        }
    }

    pub fn matches(&self, row: &[Value]) -> bool {
        self.antecedent.iter().all(|c| c.matches(row))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.antecedent.is_empty() {
            f.write_str("TRUE")?;
        }
        for (i, c) in self.antecedent.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        write!(
            f,
            " => {} (coverage {}, accuracy {:.3})",
            self.consequent, self.coverage, self.accuracy
        )
    }
}

/// The first rule, in list order, whose antecedent holds for `row`.
pub fn first_match<'a>(rules: &'a [Rule], row: &[Value]) -> Option<&'a Rule> {
    rules.iter().find(|r| r.matches(row))
}

fn add_bound(path: &mut Vec<Condition>, attribute: &str, index: usize, le: bool, t: f64) {
    for c in path.iter_mut() {
        if let Condition::Range {
            index: i,
            above,
            at_most,
            ..
        } = c
        {
            if *i == index {
                if le {
                    *at_most = Some(at_most.map_or(t, |b| b.min(t)));
                } else {
                    *above = Some(above.map_or(t, |a| a.max(t)));
                }
                return;
            }
        }
    }
    path.push(Condition::Range {
        attribute: attribute.to_string(),
        index,
        above: (!le).then_some(t),
        at_most: le.then_some(t),
    });
}

fn collect(node: &Node, path: &[Condition], out: &mut Vec<(Vec<Condition>, String)>) {
    match node {
        Node::Leaf { label, .. } => out.push((path.to_vec(), label.clone())),
        Node::Split {
            attribute,
            index,
            split,
            children,
            ..
        } => {
            for (b, child) in children.iter().enumerate() {
                let mut p = path.to_vec();
                match split {
                    SplitKind::Nominal { labels } => p.push(Condition::Equals {
                        attribute: attribute.clone(),
                        index: *index,
                        value: labels[b].clone(),
                    }),
                    SplitKind::Threshold { threshold } => {
                        add_bound(&mut p, attribute, *index, b == 0, *threshold)
                    }
                }
                collect(child, &p, out);
            }
        }
    }
}

/// One rule per leaf, numeric tests on the same attribute merged into a
/// single interval. Coverage and accuracy are measured on `ds`; rules are
/// sorted by coverage, largest first.
pub fn tree_to_rules(tree: &DecisionTree, ds: &Dataset) -> Result<Vec<Rule>> {
    let target = ds.schema().require(&tree.target)?;
    let mut paths = Vec::new();
    collect(&tree.root, &[], &mut paths);
    for (path, _) in &paths {
        for c in path {
            let ok = ds.schema().index_of(c.attribute()) == Some(c.index());
            if !ok {
                return Err(LearnError::Tabular(
                    crate::tabular::TabularError::SchemaMismatch(format!(
                        "tree tests `{}` which is not at the same position in this dataset",
                        c.attribute()
                    )),
                ));
            }
        }
    }
    let mut rules: Vec<Rule> = paths
        .into_iter()
        .map(|(antecedent, label)| {
            let mut coverage = 0;
            let mut correct = 0;
            for row in ds.rows() {
                if antecedent.iter().all(|c| c.matches(row)) {
                    coverage += 1;
                    if row[target].as_label() == Some(label.as_str()) {
                        correct += 1;
                    }
                }
            }
            Rule::new(antecedent, label, coverage, correct)
        })
        .collect();
    rules.sort_by_key(|r| std::cmp::Reverse(r.coverage));
    Ok(rules)
}
