//! Software mention extraction, disambiguation and knowledge-graph construction.

pub mod corpus;
pub mod disambig;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod kg;
pub mod query;
pub mod tagger;
pub mod weaksup;

pub use error::{Error, Result};
