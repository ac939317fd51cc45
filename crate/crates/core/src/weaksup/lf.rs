//! Labeling functions: dictionary lookup, general and exact context rules and
//! the negative list.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::candidates::{is_name_like, Candidate};
use crate::error::{read_to_string, Error, Result};
use crate::ingest::{lemma, stem, tokenize, Sentence, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    Positive,
    Negative,
    Abstain,
}

impl Vote {
    pub fn as_i8(self) -> i8 {
        match self {
            Vote::Positive => 1,
            Vote::Negative => -1,
            Vote::Abstain => 0,
        }
    }
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vote::Positive => "POSITIVE",
            Vote::Negative => "NEGATIVE",
            Vote::Abstain => "ABSTAIN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingFunctionVote {
    pub lf_id: String,
    pub value: Vote,
}

pub const LANGUAGES: [&str; 4] = ["en", "de", "es", "fr"];

/// Alias → canonical KB id, restricted to four languages and with common
/// English words removed.
#[derive(Debug, Clone, Default)]
pub struct KbAliasDictionary {
    entries: BTreeMap<String, String>,
    // token-surface sequences for matching over tokenized text
    token_keys: HashSet<Vec<String>>,
    max_tokens: usize,
}

impl KbAliasDictionary {
    /// Builds from `(id, alias, language)` triples. Aliases whose lowercase
    /// form is in `english_words` and languages outside en/de/es/fr are dropped.
    pub fn from_entries<'a, I>(entries: I, english_words: &HashSet<String>) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut dict = KbAliasDictionary::default();
        for (id, alias, lang) in entries {
            let alias = collapse_ws(alias);
            if alias.is_empty()
                || !LANGUAGES.contains(&lang)
                || english_words.contains(&alias.to_lowercase())
            {
                continue;
            }
            let key: Vec<String> = tokenize(&alias).into_iter().map(|t| t.surface).collect();
            dict.max_tokens = dict.max_tokens.max(key.len());
            dict.token_keys.insert(key);
            // first id wins for an alias shared by several entries
            dict.entries.entry(alias).or_insert_with(|| id.to_string());
        }
        dict
    }

    /// `id \t alias \t language` lines; a missing language column means `en`.
    pub fn load(path: &Path, english_words: &HashSet<String>) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 {
                return Err(Error::format(
                    path.display().to_string(),
                    n + 1,
                    "expected `id<TAB>alias<TAB>language`",
                ));
            }
            rows.push((
                cols[0].trim(),
                cols[1],
                cols.get(2).map_or("en", |l| l.trim()),
            ));
        }
        Ok(Self::from_entries(rows, english_words))
    }

    pub fn contains(&self, alias: &str) -> bool {
        self.entries.contains_key(&collapse_ws(alias))
    }

    pub fn get(&self, alias: &str) -> Option<&str> {
        self.entries.get(&collapse_ws(alias)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Leftmost-longest alias matches over a token sequence, as half-open spans.
    pub fn longest_matches(&self, tokens: &[Token]) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let longest = (1..=self.max_tokens.min(tokens.len() - i))
                .rev()
                .find(|&n| {
                    let key: Vec<String> =
                        tokens[i..i + n].iter().map(|t| t.surface.clone()).collect();
                    self.token_keys.contains(&key)
                });
            match longest {
                Some(n) => {
                    spans.push((i, i + n));
                    i += n;
                }
                None => i += 1,
            }
        }
        spans
    }
}

/// Lowercase word list, one per line.
pub fn load_wordlist(path: &Path) -> Result<HashSet<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Exact-surface dictionary vote.
pub fn lf_dictionary(c: &Candidate, dict: &KbAliasDictionary) -> Vote {
    if dict.contains(c.surface.trim()) {
        Vote::Positive
    } else {
        Vote::Abstain
    }
}

pub const CONTEXT_WINDOW: usize = 4;
const HEAD_WORDS: [&str; 6] = [
    "software", "tool", "toolbox", "package", "program", "script",
];
pub(crate) const COMPANY_SUFFIXES: [&str; 7] =
    ["Inc", "Ltd", "GmbH", "Corp", "Corporation", "LLC", "Co"];

/// Which general context cues fired around a candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContextCues {
    pub head_word: bool,
    pub version: bool,
    pub developer: bool,
}

impl ContextCues {
    pub fn any(self) -> bool {
        self.head_word || self.version || self.developer
    }
}

/// Indices of up to `width` content tokens on each side of `start..end`,
/// skipping stopwords and punctuation.
pub fn context_window(tokens: &[Token], start: usize, end: usize, width: usize) -> Vec<usize> {
    let content = |i: &usize| !(tokens[*i].is_stopword || tokens[*i].is_punct());
    let mut left: Vec<usize> = (0..start).rev().filter(content).take(width).collect();
    left.reverse();
    left.extend((end..tokens.len()).filter(content).take(width));
    left
}

pub fn is_number(s: &str) -> bool {
    let mut parts = s.split('.');
    parts.all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
}

/// `v0.3`, `V17`, dotted numerals like `2.0.12`.
pub fn is_version_token(s: &str) -> bool {
    if let Some(rest) = s.strip_prefix(['v', 'V']) {
        if rest.starts_with(|c: char| c.is_ascii_digit()) && is_number(rest) {
            return true;
        }
    }
    is_number(s) && s.matches('.').count() >= 2
}

/// Version cue anchored at token `i`: a version token, `version <number>`, or `v. <number>`.
pub fn version_at(tokens: &[Token], i: usize) -> bool {
    let s = tokens[i].surface.as_str();
    if is_version_token(s) {
        return true;
    }
    let next_number = |j: usize| tokens.get(j).is_some_and(|t| is_number(&t.surface));
    if s.eq_ignore_ascii_case("version") {
        return next_number(i + 1);
    }
    if s == "v" || s == "V" {
        return tokens.get(i + 1).is_some_and(|t| t.surface == ".") && next_number(i + 2);
    }
    false
}

fn is_cap(t: &Token) -> bool {
    t.is_capitalized() || t.surface.chars().next().is_some_and(|c| c.is_ascii_digit())
}

/// Developer cue anchored at token `i`: a capitalized run through `i` ending
/// in a company suffix, or `( Org ... , City`.
pub fn developer_at(tokens: &[Token], i: usize) -> bool {
    if !is_cap(&tokens[i]) {
        return false;
    }
    let mut s = i;
    while s > 0 && is_cap(&tokens[s - 1]) {
        s -= 1;
    }
    let mut e = i + 1;
    while e < tokens.len() && is_cap(&tokens[e]) {
        e += 1;
    }
    if tokens[s..e]
        .iter()
        .any(|t| COMPANY_SUFFIXES.contains(&t.surface.as_str()))
        && e - s >= 2
    {
        return true;
    }
    s > 0
        && tokens[s - 1].surface == "("
        && tokens.get(e).is_some_and(|t| t.surface == ",")
        && tokens.get(e + 1).is_some_and(is_cap)
}

pub fn general_context_cues(c: &Candidate, s: &Sentence) -> ContextCues {
    let toks = &s.tokens;
    let head_stems: Vec<String> = HEAD_WORDS.iter().map(|w| stem(w)).collect();
    let mut cues = ContextCues::default();
    for i in context_window(toks, c.start, c.end, CONTEXT_WINDOW) {
        cues.head_word |= head_stems.contains(&toks[i].stem);
        cues.version |= version_at(toks, i);
        cues.developer |= developer_at(toks, i);
    }
    cues
}

/// Positive when a name-like candidate has a head word, version or developer
/// cue in its context window.
pub fn lf_general_context(c: &Candidate, s: &Sentence) -> Vote {
    if is_name_like(s, c.start, c.end) && general_context_cues(c, s).any() {
        Vote::Positive
    } else {
        Vote::Abstain
    }
}

/// A lemma pattern with one `<>` slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPattern {
    pub text: String,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

impl ExactPattern {
    pub fn parse(text: &str) -> Option<Self> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let slot = words.iter().position(|w| *w == "<>")?;
        if words.iter().filter(|w| **w == "<>").count() != 1 {
            return None;
        }
        Some(ExactPattern {
            text: words.join(" "),
            before: words[..slot].iter().map(|w| lemma(w)).collect(),
            after: words[slot + 1..].iter().map(|w| lemma(w)).collect(),
        })
    }

    pub fn matches(&self, lemmas: &[String], start: usize, end: usize) -> bool {
        start >= self.before.len()
            && end + self.after.len() <= lemmas.len()
            && lemmas[start - self.before.len()..start] == self.before[..]
            && lemmas[end..end + self.after.len()] == self.after[..]
    }
}

pub const DEFAULT_EXACT_RULES: [&str; 8] = [
    "use <> software",
    "perform use <>",
    "analyze with <>",
    "<> be use to",
    "use <> version",
    "perform with <>",
    "<> statistical software",
    "run in <>",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactRules {
    pub patterns: Vec<ExactPattern>,
}

impl Default for ExactRules {
    fn default() -> Self {
        ExactRules {
            patterns: DEFAULT_EXACT_RULES
                .iter()
                .filter_map(|p| ExactPattern::parse(p))
                .collect(),
        }
    }
}

impl ExactRules {
    /// One pattern per line. A missing file is an error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut patterns = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            patterns.push(ExactPattern::parse(line).ok_or_else(|| {
                Error::format(
                    path.display().to_string(),
                    n + 1,
                    "pattern needs exactly one `<>` slot",
                )
            })?);
        }
        Ok(ExactRules { patterns })
    }
}

pub fn sentence_lemmas(s: &Sentence) -> Vec<String> {
    s.tokens.iter().map(|t| lemma(&t.surface)).collect()
}

pub fn lf_exact_context(c: &Candidate, lemmas: &[String], rules: &ExactRules) -> Vote {
    if rules
        .patterns
        .iter()
        .any(|p| p.matches(lemmas, c.start, c.end))
    {
        Vote::Positive
    } else {
        Vote::Abstain
    }
}

pub const DEFAULT_NEGATIVE_LIST: [&str; 2] = ["Section", "ELISA"];

pub fn load_negative_list(path: &Path) -> Result<HashSet<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

pub fn lf_negative_list(c: &Candidate, neglist: &HashSet<String>) -> Vote {
    if neglist.contains(c.surface.trim()) {
        Vote::Negative
    } else {
        Vote::Abstain
    }
}

pub const LF_DICTIONARY: &str = "dictionary";
pub const LF_GENERAL: &str = "general_context";
pub const LF_EXACT: &str = "exact_context";
pub const LF_NEGATIVE: &str = "negative_list";
pub const LF_IDS: [&str; 4] = [LF_DICTIONARY, LF_GENERAL, LF_EXACT, LF_NEGATIVE];

/// The registered labeling functions with their resources.
#[derive(Debug, Clone)]
pub struct LabelingFunctions {
    pub dictionary: KbAliasDictionary,
    pub exact_rules: ExactRules,
    pub negative_list: HashSet<String>,
}

impl LabelingFunctions {
    pub fn ids(&self) -> Vec<String> {
        LF_IDS.iter().map(|s| s.to_string()).collect()
    }

    /// Votes in [`LF_IDS`] order.
    pub fn apply(&self, c: &Candidate, s: &Sentence, lemmas: &[String]) -> Vec<Vote> {
        vec![
            lf_dictionary(c, &self.dictionary),
            lf_general_context(c, s),
            lf_exact_context(c, lemmas, &self.exact_rules),
            lf_negative_list(c, &self.negative_list),
        ]
    }

    pub fn default_negative_list() -> HashSet<String> {
        DEFAULT_NEGATIVE_LIST
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

/// Lowercased word set.
pub fn english_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> HashSet<String> {
    words
        .into_iter()
        .map(|w| w.as_ref().to_lowercase())
        .collect()
}
