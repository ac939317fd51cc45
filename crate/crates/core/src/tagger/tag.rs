use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crf::{viterbi, CrfModel};
use super::features::FeatureExtractor;
use crate::corpus::{tags_to_spans, TaggedSentence};
use crate::ingest::{Document, Sentence, StopWords};

/// Decodes one sentence.
pub fn viterbi_decode(m: &CrfModel, fx: &FeatureExtractor, s: &Sentence) -> TaggedSentence {
    let x = m.encode(&fx.sentence_features(s));
    TaggedSentence {
        sentence: s.clone(),
        tags: viterbi(m, &x),
    }
}

/// A tagged software mention with offsets into [`Document::text`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaggingResult {
    pub mentions: Vec<Mention>,
    pub tagged_docs: usize,
    /// Documents without a Methods & Materials section.
    pub skipped_docs: Vec<String>,
}

impl TaggingResult {
    pub fn mentions_per_article(&self) -> f64 {
        if self.tagged_docs == 0 {
            0.0
        } else {
            self.mentions.len() as f64 / self.tagged_docs as f64
        }
    }
}

/// Mentions of decoded sentences; sentence offsets are added to token offsets.
pub fn mentions_of(tagged: &TaggedSentence) -> Vec<Mention> {
    let s = &tagged.sentence;
    tags_to_spans(&tagged.tags)
        .into_iter()
        .map(|(a, b)| Mention {
            doc_id: s.doc_id.clone(),
            sentence_index: s.index,
            token_start: a,
            token_end: b,
            start: s.offset + s.tokens[a].start,
            end: s.offset + s.tokens[b - 1].end,
            surface: s.span_text(a, b).to_string(),
        })
        .collect()
}

/// Tags every M&M sentence of every document (documents must have their
/// `is_mm` flags set).
pub fn tag_corpus(
    m: &CrfModel,
    fx: &FeatureExtractor,
    docs: &[Document],
    stopwords: &StopWords,
) -> TaggingResult {
    let mut result = TaggingResult::default();
    let mut sentences = Vec::new();
    for doc in docs {
        if doc.mm_section().is_none() {
            result.skipped_docs.push(doc.id.clone());
            continue;
        }
        result.tagged_docs += 1;
        sentences.extend(doc.mm_sentences(stopwords));
    }
    let tagged: Vec<Vec<Mention>> = sentences
        .par_iter()
        .map(|s| mentions_of(&viterbi_decode(m, fx, s)))
        .collect();
    result.mentions = tagged.into_iter().flatten().collect();
    result
}
