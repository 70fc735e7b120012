//! Anomaly screening for tables that mix numeric and nominal columns.
//!
//! Two procedures combine unsupervised density detectors with supervised
//! learners:
//!
//! * [`procedures::procedure_one`] screens input-output bins (one ranked
//!   attribute against a nominal target) with LOF.
//! * [`procedures::procedure_two`] votes LOF and DBSCAN, refines the vote
//!   with C4.5, PRISM and naive Bayes, then ranks attributes by how far
//!   apart two K-Means centroids of the flagged rows lie.
//!
//! [`prep`] holds the affidavit preparation pipeline and [`synth`] a seeded
//! benchmark generator with ground-truth anomaly injection.

pub mod detectors;
pub mod learners;
pub mod prep;
pub mod procedures;
pub mod synth;
pub mod tabular;

pub use learners::{AttributeScore, BayesModel, DecisionTree, LearnError, Rule};
pub use tabular::{Attribute, AttributeKind, ColumnStats, Dataset, Schema, TabularError, Value};
