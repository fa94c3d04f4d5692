//! Prediction of psycho-demographic traits from sparse user-like incidence data.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`ingest`] — parse `users.csv` / `likes.csv` / `users-likes.csv` and
//!    assemble the sparse binary users-likes matrix.
//! 2. [`preprocess`] — trim rare users/likes to a stable fixpoint and report
//!    descriptive statistics.
//! 3. [`impute`] — multiple imputation of the missing binary `political`
//!    column (bootstrap LDA draws) with Rubin's-rules pooling diagnostics.
//! 4. [`dimred`] — randomized truncated SVD plus varimax rotation of the
//!    like loadings, producing per-user score matrices.
//! 5. [`regression`] / [`metrics`] — per-trait linear/logistic baselines with
//!    k-fold cross-validation, scored by Pearson correlation or ROC AUC.
//! 6. [`neural`] — fully connected feed-forward networks (one to three hidden
//!    layers, ReLU + inverted dropout, MSE loss, Adam with exponential
//!    learning-rate decay) predicting all eight traits jointly.
//! 7. [`synth`] — planted-latent-factor corpus generator for desk-scale,
//!    ground-truth verification.
//! 8. [`report`] / [`pipeline`] — evaluation report assembly and the staged,
//!    artifact-based command pipeline used by the CLI.

pub mod dimred;
pub mod error;
pub mod impute;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod preprocess;
pub mod regression;
pub mod report;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{LikeCatalog, TraitName, TraitTable, UserLikeMatrix, UserProfile};
