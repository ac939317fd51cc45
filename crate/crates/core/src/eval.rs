//! Span-level scoring in four match modes and token-level agreement.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{BioTag, TaggedSentence};
use crate::error::{Error, Result};

/// Token span `[start, end)` inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub doc_id: String,
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(doc_id: impl Into<String>, sentence_index: usize, start: usize, end: usize) -> Self {
        assert!(start < end, "empty span");
        Span {
            doc_id: doc_id.into(),
            sentence_index,
            start,
            end,
        }
    }

    fn same_sentence(&self, o: &Span) -> bool {
        self.doc_id == o.doc_id && self.sentence_index == o.sentence_index
    }

    pub fn overlaps(&self, o: &Span) -> bool {
        self.same_sentence(o) && self.start < o.end && o.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}#{}[{},{})",
            self.doc_id, self.sentence_index, self.start, self.end
        )
    }
}

/// Gold spans of an annotated corpus.
pub fn corpus_spans(corpus: &[TaggedSentence]) -> Vec<Span> {
    corpus
        .iter()
        .flat_map(|t| {
            t.spans()
                .into_iter()
                .map(|(a, b)| Span::new(t.sentence.doc_id.clone(), t.sentence.index, a, b))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchMode {
    /// First token of the name.
    B,
    /// Every token of the name except the first.
    I,
    /// Any overlap.
    Partial,
    /// Identical span.
    Exact,
}

impl MatchMode {
    pub const ALL: [MatchMode; 4] = [
        MatchMode::B,
        MatchMode::I,
        MatchMode::Partial,
        MatchMode::Exact,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MatchMode::B => "B-software",
            MatchMode::I => "I-software",
            MatchMode::Partial => "Partial",
            MatchMode::Exact => "Exact",
        }
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "b" | "b-software" => Ok(MatchMode::B),
            "i" | "i-software" => Ok(MatchMode::I),
            "partial" => Ok(MatchMode::Partial),
            "exact" => Ok(MatchMode::Exact),
            _ => Err(format!("unknown match mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f_score,
            tp,
            fp,
            fn_,
        }
    }

    /// Micro-average: counts add, ratios are recomputed.
    pub fn merge(&self, o: &Metrics) -> Metrics {
        Metrics::from_counts(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

fn check_disjoint(spans: &[Span], which: &'static str) -> Result<Vec<Span>> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    sorted.dedup();
    for w in sorted.windows(2) {
        if w[0].overlaps(&w[1]) {
            return Err(Error::OverlappingSpans {
                which,
                first: w[0].to_string(),
                second: w[1].to_string(),
            });
        }
    }
    Ok(sorted)
}

type TokenKey<'a> = (&'a str, usize, usize);

fn token_set(spans: &[Span], first: bool) -> BTreeSet<TokenKey<'_>> {
    let mut out = BTreeSet::new();
    for s in spans {
        if first {
            out.insert((s.doc_id.as_str(), s.sentence_index, s.start));
        } else {
            for t in s.start + 1..s.end {
                out.insert((s.doc_id.as_str(), s.sentence_index, t));
            }
        }
    }
    out
}

fn set_counts<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> (usize, usize, usize) {
    let tp = pred.intersection(gold).count();
    (tp, pred.len() - tp, gold.len() - tp)
}

/// Greedy left-to-right one-to-one overlap matching; returns the match count.
fn partial_matches(pred: &[Span], gold: &[Span]) -> usize {
    let mut by_sentence: HashMap<(&str, usize), Vec<(&Span, bool)>> = HashMap::new();
    for g in gold {
        by_sentence
            .entry((g.doc_id.as_str(), g.sentence_index))
            .or_default()
            .push((g, false));
    }
    let mut tp = 0;
    for p in pred {
        if let Some(golds) = by_sentence.get_mut(&(p.doc_id.as_str(), p.sentence_index)) {
            if let Some(slot) = golds.iter_mut().find(|(g, used)| !used && g.overlaps(p)) {
                slot.1 = true;
                tp += 1;
            }
        }
    }
    tp
}

/// Scores predicted against gold spans. Spans within each side must not overlap.
pub fn evaluate(pred: &[Span], gold: &[Span], mode: MatchMode) -> Result<Metrics> {
    let pred = check_disjoint(pred, "predictions")?;
    let gold = check_disjoint(gold, "gold")?;
    let (tp, fp, fn_) = match mode {
        MatchMode::B => set_counts(&token_set(&pred, true), &token_set(&gold, true)),
        MatchMode::I => set_counts(&token_set(&pred, false), &token_set(&gold, false)),
        MatchMode::Partial => {
            let tp = partial_matches(&pred, &gold);
            (tp, pred.len() - tp, gold.len() - tp)
        }
        MatchMode::Exact => {
            let p: BTreeSet<&Span> = pred.iter().collect();
            let g: BTreeSet<&Span> = gold.iter().collect();
            set_counts(&p, &g)
        }
    };
    Ok(Metrics::from_counts(tp, fp, fn_))
}

/// Metrics in every mode.
pub fn evaluate_all(pred: &[Span], gold: &[Span]) -> Result<BTreeMap<MatchMode, Metrics>> {
    MatchMode::ALL
        .iter()
        .map(|&m| evaluate(pred, gold, m).map(|r| (m, r)))
        .collect()
}

/// Tab-separated table: one row per mode, columns P, R, F.
pub fn report_table(results: &BTreeMap<MatchMode, Metrics>) -> String {
    let mut out = String::from("Mode\tPrecision\tRecall\tF-score\n");
    for (mode, m) in results {
        out.push_str(&format!(
            "{}\t{:.2}\t{:.2}\t{:.2}\n",
            mode.label(),
            m.precision,
            m.recall,
            m.f_score
        ));
    }
    out
}

/// Machine-readable summary keyed by mode label.
pub fn report_json(results: &BTreeMap<MatchMode, Metrics>) -> String {
    let map: BTreeMap<&str, &Metrics> = results.iter().map(|(k, v)| (k.label(), v)).collect();
    serde_json::to_string_pretty(&map).expect("metrics serialize") + "\n"
}

/// Cohen's kappa over paired token labels.
pub fn cohen_kappa(a1: &[BioTag], a2: &[BioTag]) -> Result<f64> {
    if a1.len() != a2.len() {
        return Err(Error::LengthMismatch {
            left: a1.len(),
            right: a2.len(),
        });
    }
    if a1 == a2 {
        return Ok(1.0);
    }
    let n = a1.len() as f64;
    let mut c1 = [0usize; 3];
    let mut c2 = [0usize; 3];
    let mut agree = 0usize;
    for (x, y) in a1.iter().zip(a2) {
        c1[x.index()] += 1;
        c2[y.index()] += 1;
        agree += usize::from(x == y);
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = (0..3).map(|k| c1[k] as f64 * c2[k] as f64).sum::<f64>() / (n * n);
    Ok((p_o - p_e) / (1.0 - p_e))
}
