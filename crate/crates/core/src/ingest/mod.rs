//! Article parsing, sentence segmentation, tokenization and word normalization.

mod article;
mod stem;
mod stopwords;
mod text;

pub use article::{
    find_mm_section, load_article, load_corpus_dir, load_manifest, normalize_heading,
    parse_article, ArticleFormat, AuthorRef, Document, HeadingSet, Section,
};
pub use stem::{lemma, stem};
pub use stopwords::StopWords;
pub use text::{split_sentences, split_sentences_with, tokenize, tokenize_with, Sentence, Token};
