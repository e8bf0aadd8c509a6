//! Classification trees with branch-exclusive splits (BEST).
//!
//! Predictors can be made available for splitting only inside subspaces
//! reached through gating splits. With auto-created missingness indicators
//! this gives a tree that never imputes: a predictor with missing values is
//! only considered below a split isolating the rows where it is observed.
//!
//! The crate also provides five baseline missing-value strategies, bagged
//! forests with Gini-decrease importance, a ground-truth simulator with
//! MAR/MNAR censoring and the experiment runner behind the `best` binary.

pub mod cli;
pub mod csv_io;
pub mod data;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod missing;
pub mod model;
pub mod policy;
pub mod simgen;
pub mod splitting;
pub mod tree;

pub use data::{Dataset, Observation, Predictor, Schema, Value};
pub use error::{Error, Result};
pub use policy::{AvailabilityPolicy, PolicySpec};
pub use tree::{FitOptions, Routing, Tree};
