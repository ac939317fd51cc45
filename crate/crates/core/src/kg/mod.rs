//! RDF graph of publications, mentions and software.

mod build;
mod jsonld;
mod model;
mod ntriples;
pub mod vocab;

pub use build::{build_graph, KgConfig};
pub use jsonld::serialize_jsonld;
pub use model::{Iri, Term, Triple, TripleGraph};
pub use ntriples::{parse_ntriples, serialize_ntriples, triple_line};
