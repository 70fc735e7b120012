//! Seeded inputs shared by the benchmarks.

use hybrid_audit::synth::{affidavit_like, generate};
use hybrid_audit::Dataset;

/// The affidavit-shaped synthetic table without its target column.
pub fn features(n_rows: usize) -> Dataset {
    target_table(n_rows).without_column("val_decl").unwrap()
}

/// The affidavit-shaped synthetic table including `val_decl`.
pub fn target_table(n_rows: usize) -> Dataset {
    generate(&affidavit_like(n_rows, 7)).unwrap()
}
