//! Self-reported human activity pipeline: activity queries, phrase
//! extraction and normalization, embedding-space clustering, value-lexicon
//! scoring, and a neural model that predicts which activity cluster a user
//! will report, with top-k and comparison-rank evaluation.

pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod extract;
pub mod io;
pub mod lexicon;
pub mod metrics;
pub mod predict;
pub mod querygen;
pub mod synth;
pub mod text;
pub mod tokenize;
pub mod values;

pub use error::{Error, Result};
