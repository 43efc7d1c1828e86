//! Correlation-based taxonomies of daily exchange-rate panels.
//!
//! The pipeline runs
//! [`market_data`] (parse, window, align, re-base) →
//! [`metrics`] (log-returns, Pearson correlation, distance) →
//! [`taxonomy`] (Kruskal MST, subdominant ultrametric, single and average
//! linkage trees) → [`bootstrap`] (link and cluster reliability) →
//! [`report`] (DOT, Newick, CSV and JSON output).

pub mod bootstrap;
mod disjoint_set;
pub mod error;
pub mod format;
pub mod market_data;
pub mod matrix;
pub mod metrics;
pub mod report;
pub mod synthetic;
pub mod taxonomy;

pub use disjoint_set::DisjointSet;
pub use error::{Error, Result};
