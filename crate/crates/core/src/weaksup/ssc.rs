use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;

use super::candidates::{generate_candidates, resolve_overlaps, Candidate};
use super::label_model::{LabelModel, VoteMatrix};
use super::lf::{sentence_lemmas, LabelingFunctions, Vote};
use crate::corpus::{spans_to_tags, TaggedSentence};
use crate::ingest::Sentence;

/// A sentence with its candidates and their LF votes.
#[derive(Debug, Clone)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    pub candidates: Vec<Candidate>,
    pub votes: Vec<Vec<Vote>>,
}

/// Generates candidates and applies every LF, in parallel over sentences.
pub fn apply_lfs(
    sentences: &[Sentence],
    lfs: &LabelingFunctions,
    max_n: usize,
) -> Vec<LabeledSentence> {
    sentences
        .par_iter()
        .map(|s| {
            let lemmas = sentence_lemmas(s);
            let candidates = generate_candidates(s, max_n);
            let votes = candidates
                .iter()
                .map(|c| lfs.apply(c, s, &lemmas))
                .collect();
            LabeledSentence {
                sentence: s.clone(),
                candidates,
                votes,
            }
        })
        .collect()
}

pub fn vote_matrix(labeled: &[LabeledSentence], lf_ids: Vec<String>) -> VoteMatrix {
    let mut m = VoteMatrix::new(lf_ids);
    for ls in labeled {
        for row in &ls.votes {
            m.push(row.clone());
        }
    }
    m
}

/// Accepted spans of one sentence: candidates with at least one vote whose
/// marginal exceeds the threshold, overlaps resolved.
pub fn accepted_spans(ls: &LabeledSentence, model: &LabelModel) -> Vec<(usize, usize)> {
    let scored: Vec<(Candidate, f64)> = ls
        .candidates
        .iter()
        .zip(&ls.votes)
        .filter(|(_, row)| row.iter().any(|v| *v != Vote::Abstain))
        .filter(|(_, row)| model.predict_row(row) > model.threshold)
        .map(|(c, row)| (c.clone(), model.log_odds_row(row)))
        .collect();
    resolve_overlaps(&ls.sentence, &scored)
        .into_iter()
        .map(|i| (scored[i].0.start, scored[i].0.end))
        .collect()
}

/// Thresholds the marginals and converts accepted spans to BIO tags.
pub fn emit_ssc(labeled: &[LabeledSentence], model: &LabelModel) -> Vec<TaggedSentence> {
    labeled
        .par_iter()
        .map(|ls| {
            let spans = accepted_spans(ls, model);
            TaggedSentence {
                sentence: ls.sentence.clone(),
                tags: spans_to_tags(ls.sentence.len(), &spans),
            }
        })
        .collect()
}

/// Surfaces the weak labeler accepts on a gold-annotated corpus that never
/// match a gold span, most frequent first. Feeds the negative list.
pub fn false_positive_ngrams(
    gold: &[TaggedSentence],
    lfs: &LabelingFunctions,
    model: &LabelModel,
    max_n: usize,
) -> Vec<(String, usize)> {
    let sentences: Vec<Sentence> = gold.iter().map(|g| g.sentence.clone()).collect();
    let labeled = apply_lfs(&sentences, lfs, max_n);
    let mut fp: BTreeMap<String, usize> = BTreeMap::new();
    let mut tp: BTreeSet<String> = BTreeSet::new();
    for (ls, g) in labeled.iter().zip(gold) {
        let gold_spans: HashSet<(usize, usize)> = g.spans().into_iter().collect();
        for (s, e) in accepted_spans(ls, model) {
            let surface = ls.sentence.span_text(s, e).to_string();
            if gold_spans.contains(&(s, e)) {
                tp.insert(surface);
            } else {
                *fp.entry(surface).or_insert(0) += 1;
            }
        }
    }
    let mut out: Vec<(String, usize)> = fp.into_iter().filter(|(s, _)| !tp.contains(s)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
