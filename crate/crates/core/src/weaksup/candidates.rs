use serde::{Deserialize, Serialize};

use crate::ingest::{Sentence, Token};

pub const MAX_CANDIDATE_TOKENS: usize = 6;

/// A contiguous token n-gram of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Half-open token range.
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl Candidate {
    pub fn n(&self) -> usize {
        self.end - self.start
    }

    pub fn overlaps(&self, other: &Candidate) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// All n-grams with `1 ≤ n ≤ max_n`, skipping those made only of stopwords
/// and punctuation. Ordered by start token, then length.
pub fn generate_candidates(sentence: &Sentence, max_n: usize) -> Vec<Candidate> {
    let toks = &sentence.tokens;
    let mut out = Vec::new();
    for start in 0..toks.len() {
        let mut has_content = false;
        for end in start + 1..=(start + max_n).min(toks.len()) {
            let t = &toks[end - 1];
            has_content |= !(t.is_stopword || t.is_punct());
            if has_content {
                out.push(Candidate {
                    doc_id: sentence.doc_id.clone(),
                    sentence_index: sentence.index,
                    start,
                    end,
                    surface: sentence.span_text(start, end).to_string(),
                });
            }
        }
    }
    out
}

/// Capitalized or mixed-case token; at sentence start only inner capitals count.
pub fn is_proper_noun_shaped(tokens: &[Token], i: usize) -> bool {
    let mut chars = tokens[i].surface.chars();
    let first = chars.next();
    let inner_upper = chars.any(char::is_uppercase);
    if i == 0 {
        inner_upper
    } else {
        first.is_some_and(char::is_uppercase) || inner_upper
    }
}

/// Every content token of the span is proper-noun-shaped and the span neither
/// starts nor ends with a stopword or punctuation.
pub fn is_name_like(sentence: &Sentence, start: usize, end: usize) -> bool {
    let toks = &sentence.tokens;
    let edge_ok = |t: &Token| !(t.is_stopword || t.is_punct());
    if !edge_ok(&toks[start]) || !edge_ok(&toks[end - 1]) {
        return false;
    }
    (start..end).all(|i| {
        let t = &toks[i];
        t.is_stopword || t.is_punct() || is_proper_noun_shaped(toks, i)
    })
}

/// Greedy selection of non-overlapping spans from scored candidates.
///
/// Order: higher score, then a span made of proper-noun-shaped tokens, then
/// longer, then leftmost. Returns indices into `scored`, sorted by position.
pub fn resolve_overlaps(sentence: &Sentence, scored: &[(Candidate, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    let shaped: Vec<bool> = scored
        .iter()
        .map(|(c, _)| is_name_like(sentence, c.start, c.end))
        .collect();
    order.sort_by(|&a, &b| {
        let (ca, sa) = &scored[a];
        let (cb, sb) = &scored[b];
        sb.total_cmp(sa)
            .then(shaped[b].cmp(&shaped[a]))
            .then(cb.n().cmp(&ca.n()))
            .then(ca.start.cmp(&cb.start))
    });
    let mut taken: Vec<usize> = Vec::new();
    for i in order {
        if taken.iter().all(|&j| !scored[j].0.overlaps(&scored[i].0)) {
            taken.push(i);
        }
    }
    taken.sort_by_key(|&i| scored[i].0.start);
    taken
}
