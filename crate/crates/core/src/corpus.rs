//! BIO-tagged sentences and the token-per-line corpus format shared by the
//! silver and gold corpora.
//!
//! ```text
//! -DOCSTART- doc-1
//! We	O
//! used	O
//! SPSS	B-software
//!
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::ingest::{Sentence, StopWords};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BioTag {
    O,
    B,
    I,
}

impl BioTag {
    pub const ALL: [BioTag; 3] = [BioTag::O, BioTag::B, BioTag::I];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> BioTag {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BioTag::O => "O",
            BioTag::B => "B-software",
            BioTag::I => "I-software",
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BioTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "O" => Ok(BioTag::O),
            "B-software" => Ok(BioTag::B),
            "I-software" => Ok(BioTag::I),
            other => Err(format!("unknown tag `{other}`")),
        }
    }
}

/// True when no I follows O or the sentence start.
pub fn is_valid_bio(tags: &[BioTag]) -> bool {
    let mut prev = BioTag::O;
    for &t in tags {
        if t == BioTag::I && prev == BioTag::O {
            return false;
        }
        prev = t;
    }
    true
}

/// Half-open token spans of the B/I runs.
pub fn tags_to_spans(tags: &[BioTag]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &t) in tags.iter().enumerate() {
        match t {
            BioTag::B => {
                if let Some(s) = open.take() {
                    spans.push((s, i));
                }
                open = Some(i);
            }
            BioTag::I => {
                open.get_or_insert(i);
            }
            BioTag::O => {
                if let Some(s) = open.take() {
                    spans.push((s, i));
                }
            }
        }
    }
    if let Some(s) = open {
        spans.push((s, tags.len()));
    }
    spans
}

/// Tags for non-overlapping spans over a sentence of `len` tokens.
pub fn spans_to_tags(len: usize, spans: &[(usize, usize)]) -> Vec<BioTag> {
    let mut tags = vec![BioTag::O; len];
    for &(s, e) in spans {
        tags[s] = BioTag::B;
        for t in &mut tags[s + 1..e] {
            *t = BioTag::I;
        }
    }
    tags
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub sentence: Sentence,
    pub tags: Vec<BioTag>,
}

impl TaggedSentence {
    pub fn new(sentence: Sentence, tags: Vec<BioTag>) -> Result<Self> {
        if sentence.len() != tags.len() {
            return Err(Error::LengthMismatch {
                left: sentence.len(),
                right: tags.len(),
            });
        }
        if !is_valid_bio(&tags) {
            return Err(Error::Config(format!(
                "invalid BIO sequence in sentence {} of `{}`",
                sentence.index, sentence.doc_id
            )));
        }
        Ok(TaggedSentence { sentence, tags })
    }

    pub fn untagged(sentence: Sentence) -> Self {
        let tags = vec![BioTag::O; sentence.len()];
        TaggedSentence { sentence, tags }
    }

    pub fn spans(&self) -> Vec<(usize, usize)> {
        tags_to_spans(&self.tags)
    }

    /// Has at least one non-O tag.
    pub fn is_positive(&self) -> bool {
        self.tags.iter().any(|&t| t != BioTag::O)
    }
}

/// Serializes sentences; a `-DOCSTART-` line precedes each change of doc id.
pub fn write_conll(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for ts in sentences {
        if current != Some(ts.sentence.doc_id.as_str()) {
            out.push_str("-DOCSTART- ");
            out.push_str(&ts.sentence.doc_id);
            out.push_str("\n\n");
            current = Some(&ts.sentence.doc_id);
        }
        for (tok, tag) in ts.sentence.tokens.iter().zip(&ts.tags) {
            out.push_str(&tok.surface);
            out.push('\t');
            out.push_str(tag.as_str());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Parses the token-per-line format. `source` names the input in errors.
/// Sentences are re-indexed per document.
pub fn parse_conll(text: &str, source: &str, stopwords: &StopWords) -> Result<Vec<TaggedSentence>> {
    let mut out = Vec::new();
    let mut doc_id = String::from("doc");
    let mut index = 0usize;
    let mut surfaces: Vec<String> = Vec::new();
    let mut tags: Vec<BioTag> = Vec::new();
    let mut start_line = 1;

    let mut flush = |surfaces: &mut Vec<String>,
                     tags: &mut Vec<BioTag>,
                     doc_id: &str,
                     index: &mut usize,
                     line: usize|
     -> Result<()> {
        if surfaces.is_empty() {
            return Ok(());
        }
        let sentence = Sentence::from_surfaces_with(doc_id, *index, surfaces, stopwords);
        let ts = TaggedSentence::new(sentence, std::mem::take(tags))
            .map_err(|_| Error::format(source, line, "I-software follows O or sentence start"))?;
        out.push(ts);
        surfaces.clear();
        *index += 1;
        Ok(())
    };

    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut surfaces, &mut tags, &doc_id, &mut index, start_line)?;
            start_line = n + 2;
            continue;
        }
        if let Some(rest) = line.strip_prefix("-DOCSTART-") {
            flush(&mut surfaces, &mut tags, &doc_id, &mut index, start_line)?;
            doc_id = rest.trim().to_string();
            if doc_id.is_empty() {
                return Err(Error::format(
                    source,
                    n + 1,
                    "missing document id after -DOCSTART-",
                ));
            }
            index = 0;
            start_line = n + 2;
            continue;
        }
        let (surface, tag) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::format(source, n + 1, "expected `token<TAB>tag`"))?;
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::format(
                source,
                n + 1,
                "token must be non-empty without whitespace",
            ));
        }
        let tag = tag
            .trim()
            .parse()
            .map_err(|e: String| Error::format(source, n + 1, e))?;
        surfaces.push(surface.to_string());
        tags.push(tag);
    }
    flush(&mut surfaces, &mut tags, &doc_id, &mut index, start_line)?;
    Ok(out)
}

pub fn read_conll(path: &Path, stopwords: &StopWords) -> Result<Vec<TaggedSentence>> {
    let text = read_to_string(path)?;
    parse_conll(&text, &path.display().to_string(), stopwords)
}
