//! PRISM separate-and-conquer rule induction over nominal attributes.

use std::collections::HashMap;

use super::{require_nominal_inputs, Classes, Condition, LearnError, Result, Rule};
use crate::tabular::Dataset;

/// Per-attribute label ids, `None` for missing cells.
struct Encoded {
    labels: Vec<Vec<String>>,
    cells: Vec<Vec<Option<usize>>>,
}

impl Encoded {
    fn new(ds: &Dataset) -> Self {
        let width = ds.n_attributes();
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); width];
        let mut ids: Vec<HashMap<&str, usize>> = vec![HashMap::new(); width];
        let cells = ds
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.as_label().map(|s| {
                            *ids[j].entry(s).or_insert_with(|| {
                                labels[j].push(s.to_string());
                                labels[j].len() - 1
                            })
                        })
                    })
                    .collect()
            })
            .collect();
        Encoded { labels, cells }
    }
}

/// `p1/t1 > p2/t2` without rounding.
fn more_accurate(p1: usize, t1: usize, p2: usize, t2: usize) -> bool {
    (p1 as u128) * (t2 as u128) > (p2 as u128) * (t1 as u128)
}

/// Learns PRISM rules for every class of `target`, classes taken in order
/// of first appearance.
///
/// For each class the full training set is restored; rules are grown by
/// adding the attribute-value test with the highest accuracy (ties: more
/// rows covered, then schema order, then label order) until the rule is
/// perfect or no test improves it, and every row the rule covers is then
/// removed. Each rule's coverage and accuracy refer to the rows remaining
/// when it was generated.
pub fn prism_build(ds: &Dataset, target: &str) -> Result<Vec<Rule>> {
    let classes = Classes::new(ds, target)?;
    require_nominal_inputs(ds, classes.target)?;
    let all_rows = classes.training_rows();
    if all_rows.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let enc = Encoded::new(ds);
    let n_attrs = ds.n_attributes();
    let mut rules = Vec::new();

    for class in 0..classes.labels.len() {
        let mut remaining = all_rows.clone();
        while remaining.iter().any(|&r| classes.class(r) == class) {
            let mut covered = remaining.clone();
            let mut antecedent: Vec<(usize, usize)> = Vec::new();
            let mut p_cur = covered
                .iter()
                .filter(|&&r| classes.class(r) == class)
                .count();
            let mut t_cur = covered.len();

            while p_cur < t_cur {
                // (p, t, attr, label)
                let mut best: Option<(usize, usize, usize, usize)> = None;
                for attr in 0..n_attrs {
                    if attr == classes.target || antecedent.iter().any(|&(a, _)| a == attr) {
                        continue;
                    }
                    // labels in order of first appearance within `covered`
                    let mut order: Vec<usize> = Vec::new();
                    let mut tally: HashMap<usize, (usize, usize)> = HashMap::new();
                    for &r in &covered {
                        if let Some(l) = enc.cells[r][attr] {
                            let e = tally.entry(l).or_insert_with(|| {
                                order.push(l);
                                (0, 0)
                            });
                            e.1 += 1;
                            if classes.class(r) == class {
                                e.0 += 1;
                            }
                        }
                    }
                    for l in order {
                        let (p, t) = tally[&l];
                        let better = match best {
                            None => true,
                            Some((bp, bt, _, _)) => {
                                more_accurate(p, t, bp, bt)
                                    || (!more_accurate(bp, bt, p, t) && t > bt)
                            }
                        };
                        if better {
                            best = Some((p, t, attr, l));
                        }
                    }
                }
                let Some((p, t, attr, label)) = best else {
                    break;
                };
                if !more_accurate(p, t, p_cur, t_cur) {
                    break;
                }
                antecedent.push((attr, label));
                covered.retain(|&r| enc.cells[r][attr] == Some(label));
                p_cur = p;
                t_cur = t;
            }

            remaining.retain(|r| covered.binary_search(r).is_err());
            let conditions = antecedent
                .iter()
                .map(|&(attr, label)| Condition::Equals {
                    attribute: ds.schema().attribute(attr).name.clone(),
                    index: attr,
                    value: enc.labels[attr][label].clone(),
                })
                .collect();
            rules.push(Rule::new(
                conditions,
                classes.labels[class].clone(),
                t_cur,
                p_cur,
            ));
        }
    }
    Ok(rules)
}
