//! Automatic feature engineering for tabular binary classification.
//!
//! The library mines promising feature combinations from the split paths of a
//! gradient-boosted tree ensemble, synthesizes new columns with arithmetic
//! operators, and keeps the useful ones through a three-stage selection
//! cascade (information value, Pearson redundancy pruning, importance
//! ranking). The result is a serializable feature-generation plan that can be
//! applied to unseen data.
//!
//! The typical entry point is [`pipeline::run`], or the `safe-fe` binary for
//! command-line use.

pub mod combiner;
pub mod data;
pub mod error;
pub mod eval;
pub mod gbdt;
pub mod num;
pub mod operators;
pub mod pipeline;
pub mod selector;

/// Scalar type used by datasets and every pipeline stage.
pub type Real = f64;

pub use data::{Dataset, MissingPolicy, SplitSpec};
pub use error::{Error, Result};
pub use gbdt::{GbdtConfig, TreeEnsemble};
pub use operators::{FeatureDef, TransformPlan};
pub use pipeline::{Mode, SafeConfig};
pub use selector::{SelectionReport, SelectorConfig};
