//! Lexical substitution toolkit: target-word injection on top of external
//! substitute distributions, evaluation, word sense induction and WordNet
//! relation profiling.

pub mod datasets;
pub mod error;
pub mod estimators;
pub mod injection;
pub mod interchange;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod postproc;
pub mod relations;
pub mod wsi;
mod wnfiles;

pub use error::{Error, Result};
pub use wnfiles::{default_wordnet_dir, WORDNET_DIR_ENV};
