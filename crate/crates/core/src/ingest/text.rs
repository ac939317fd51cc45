//! Sentence segmentation and tokenization with exact byte offsets.

use serde::{Deserialize, Serialize};

use super::stem::stem;
use super::stopwords::StopWords;

/// A token of a sentence. `start..end` is a byte range into the sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub is_stopword: bool,
    pub stem: String,
}

impl Token {
    pub fn is_punct(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }

    /// Starts with an uppercase letter.
    pub fn is_capitalized(&self) -> bool {
        self.surface.chars().next().is_some_and(char::is_uppercase)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    /// Byte offset of `text` in the text it was split from.
    pub offset: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence from already-split token surfaces joined by single spaces.
    pub fn from_surfaces<S: AsRef<str>>(doc_id: &str, index: usize, surfaces: &[S]) -> Self {
        Self::from_surfaces_with(doc_id, index, surfaces, &StopWords::english())
    }

    pub fn from_surfaces_with<S: AsRef<str>>(
        doc_id: &str,
        index: usize,
        surfaces: &[S],
        stopwords: &StopWords,
    ) -> Self {
        let mut text = String::new();
        let mut tokens = Vec::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(s.as_ref());
            tokens.push(make_token(s.as_ref(), start, text.len(), stopwords));
        }
        Sentence {
            doc_id: doc_id.to_string(),
            index,
            text,
            offset: 0,
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    /// Text covered by the half-open token range.
    pub fn span_text(&self, start: usize, end: usize) -> &str {
        &self.text[self.tokens[start].start..self.tokens[end - 1].end]
    }
}

fn make_token(surface: &str, start: usize, end: usize, stopwords: &StopWords) -> Token {
    Token {
        surface: surface.to_string(),
        start,
        end,
        is_stopword: stopwords.contains(surface),
        stem: stem(surface),
    }
}

/// Tokenizes with the built-in stopword list.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_with(text, &StopWords::english())
}

/// Splits on whitespace and punctuation, keeping version strings (`v0.3`,
/// `2.0.12`), decimals, hyphenated names and `C++`-style names whole.
pub fn tokenize_with(text: &str, stopwords: &StopWords) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_alphanumeric() {
            let end = start + c.len_utf8();
            tokens.push(make_token(&text[start..end], start, end, stopwords));
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() {
            let (_, cur) = chars[j];
            if cur.is_alphanumeric() {
                j += 1;
                continue;
            }
            let prev = chars[j - 1].1;
            let next = chars.get(j + 1).map(|&(_, n)| n);
            let joins = match cur {
                '.' | '-' | '_' => {
                    prev.is_alphanumeric() && next.is_some_and(char::is_alphanumeric)
                }
                '\'' | '\u{2019}' => prev.is_alphabetic() && next.is_some_and(char::is_alphabetic),
                ',' => {
                    prev.is_ascii_digit()
                        && next.is_some_and(|n| n.is_ascii_digit())
                        && thousands_group(&chars, j + 1)
                }
                '+' | '#' => {
                    (prev.is_alphabetic() || prev == '+')
                        && !next.is_some_and(char::is_alphanumeric)
                }
                _ => false,
            };
            if !joins {
                break;
            }
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(o, _)| o);
        tokens.push(make_token(&text[start..end], start, end, stopwords));
        i = j;
    }
    tokens
}

/// Exactly three digits follow, as in `31,915`.
fn thousands_group(chars: &[(usize, char)], from: usize) -> bool {
    let digits = chars[from..]
        .iter()
        .take_while(|(_, c)| c.is_ascii_digit())
        .count();
    digits == 3
}

const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "ca", "cf", "co", "corp", "dept", "dr", "e.g", "eq", "eqs", "fig", "figs",
    "i.e", "inc", "jr", "ltd", "mr", "mrs", "ms", "no", "nos", "pp", "prof", "ref", "refs", "resp",
    "sp", "spp", "sr", "st", "u.k", "u.s", "univ", "v", "vol", "vs", "viz",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

/// Rule-based sentence splitter with the built-in stopword list.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    split_sentences_with(text, &StopWords::english())
}

/// Splits at `.`, `!` or `?` followed by whitespace and a plausible sentence
/// start, and at blank lines. Known abbreviations and single-letter initials
/// never end a sentence. Sentence texts are trimmed; everything between
/// sentences is whitespace.
pub fn split_sentences_with(text: &str, stopwords: &StopWords) -> Vec<Sentence> {
    let mut ranges = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut seg_start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c == '\n' {
            // blank line: hard boundary
            let mut j = i + 1;
            while j < chars.len() && chars[j].1 != '\n' && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j < chars.len() && chars[j].1 == '\n' {
                ranges.push((seg_start, off));
                seg_start = chars[j].0;
                i = j;
                continue;
            }
        }
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(o, _)| o);
            let followed_by_space = j >= chars.len() || chars[j].1.is_whitespace();
            if followed_by_space
                && starts_sentence(&chars, j)
                && !(c == '.' && is_abbreviation(text, off))
            {
                ranges.push((seg_start, end));
                seg_start = end;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    ranges.push((seg_start, text.len()));

    ranges
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trimmed = slice.trim();
            (!trimmed.is_empty()).then(|| (s + lead, trimmed))
        })
        .enumerate()
        .map(|(index, (offset, t))| Sentence {
            doc_id: String::new(),
            index,
            text: t.to_string(),
            offset,
            tokens: tokenize_with(t, stopwords),
        })
        .collect()
}

fn starts_sentence(chars: &[(usize, char)], from: usize) -> bool {
    match chars[from..]
        .iter()
        .map(|&(_, c)| c)
        .find(|c| !c.is_whitespace())
    {
        None => true,
        Some(c) => {
            c.is_uppercase() || c.is_ascii_digit() || matches!(c, '(' | '[' | '"' | '\u{201c}')
        }
    }
}

/// Whether the period at byte `dot` closes an abbreviation or an initial.
fn is_abbreviation(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let word_start = before.rfind(char::is_whitespace).map_or(0, |p| {
        p + before[p..].chars().next().map_or(1, char::len_utf8)
    });
    let word = before[word_start..].trim_start_matches(['(', '[', '"', '\u{201c}']);
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let mut letters = word.chars();
    if let (Some(first), None) = (letters.next(), letters.next()) {
        // a lone letter is an initial only inside a run like "J. R. Smith",
        // so "analysed in R. Results ..." still splits
        if first.is_alphabetic() {
            let prev = before[..word_start].split_whitespace().next_back();
            let next = text[dot + 1..].split_whitespace().next();
            return prev.is_some_and(is_initial) || next.is_some_and(is_initial);
        }
    }
    false
}

fn is_initial(word: &str) -> bool {
    let mut chars = word.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_alphabetic())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn tokenize_keeps_version_strings() {
        assert_eq!(
            surfaces("SPSS v17.0, Chicago"),
            ["SPSS", "v17.0", ",", "Chicago"]
        );
        assert_eq!(surfaces("R2 = 0.95"), ["R2", "=", "0.95"]);
        assert_eq!(surfaces("x"), ["x"]);
        assert_eq!(surfaces("version 2.0.12."), ["version", "2.0.12", "."]);
    }

    #[test]
    fn tokenize_handles_names_and_abbreviations() {
        assert_eq!(
            surfaces("bi-LSTM and C++ (e.g. Stata)"),
            ["bi-LSTM", "and", "C++", "(", "e.g", ".", "Stata", ")"]
        );
        assert_eq!(
            surfaces("SPSS Inc., Chicago"),
            ["SPSS", "Inc", ".", ",", "Chicago"]
        );
        assert_eq!(
            surfaces("31,915 sentences, 2,3"),
            ["31,915", "sentences", ",", "2", ",", "3"]
        );
    }

    #[test]
    fn token_flags() {
        let toks = tokenize("The Statistical software");
        assert!(toks[0].is_stopword);
        assert!(!toks[1].is_stopword);
        assert_eq!(toks[1].stem, "statist");
        assert!(toks[1].is_capitalized());
    }

    #[test]
    fn example_sentence_does_not_split() {
        let s = "We used SPSS software version 23 (SPSS Inc., Chicago, USA) for non-image-based statistical analyses.";
        let out = split_sentences(s);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, s);
    }

    #[test]
    fn initials_do_not_split() {
        assert_eq!(split_sentences("A. B. C.").len(), 1);
        assert_eq!(split_sentences("Written by J. R. Smith in 2019.").len(), 1);
    }

    #[test]
    fn empty_input() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n ").is_empty());
    }

    #[test]
    fn splits_regular_sentences_and_blank_lines() {
        let text = "We used R. Analyses were done in Stata 14.2! Was it SPSS? Yes\n\nNew paragraph";
        let out: Vec<_> = split_sentences(text).into_iter().map(|s| s.text).collect();
        assert_eq!(
            out,
            [
                "We used R.",
                "Analyses were done in Stata 14.2!",
                "Was it SPSS?",
                "Yes",
                "New paragraph"
            ]
        );
    }

    #[test]
    fn abbreviations_and_versions_do_not_split() {
        let text = "Data were analysed with SAS v. 9.4 (SAS Institute Inc. Cary, NC) e.g. for models. Version 2.0.12 was used.";
        let out: Vec<_> = split_sentences(text).into_iter().map(|s| s.text).collect();
        assert_eq!(out.len(), 2, "{out:?}");
    }

    #[test]
    fn hand_labelled_fixture_has_ten_sentences() {
        let text = include_str!("../../tests/data/sentences.txt");
        let expected: Vec<&str> = include_str!("../../tests/data/sentences.expected")
            .lines()
            .filter(|l| !l.is_empty())
            .collect();
        let out: Vec<_> = split_sentences(text).into_iter().map(|s| s.text).collect();
        assert_eq!(out.len(), 10);
        assert_eq!(out, expected);
    }

    proptest::proptest! {
        #[test]
        fn token_offsets_round_trip(text in "[ a-zA-Z0-9.,()\\-+µé]{0,80}") {
            let toks = tokenize(&text);
            let mut last_end = 0;
            for t in &toks {
                proptest::prop_assert!(t.start < t.end);
                proptest::prop_assert!(t.start >= last_end);
                proptest::prop_assert_eq!(&text[t.start..t.end], t.surface.as_str());
                last_end = t.end;
            }
            // nothing but whitespace is dropped
            let kept: usize = toks.iter().map(|t| t.end - t.start).sum();
            let non_ws: usize = text.chars().filter(|c| !c.is_whitespace()).map(char::len_utf8).sum();
            proptest::prop_assert_eq!(kept, non_ws);
        }

        #[test]
        fn sentence_split_is_loss_free(text in "[ a-zA-Z0-9.!?,()\n]{0,120}") {
            let sents = split_sentences(&text);
            let mut cursor = 0;
            for s in &sents {
                proptest::prop_assert!(text[cursor..s.offset].trim().is_empty());
                proptest::prop_assert_eq!(&text[s.offset..s.offset + s.text.len()], s.text.as_str());
                cursor = s.offset + s.text.len();
            }
            proptest::prop_assert!(text[cursor..].trim().is_empty());
        }
    }
}
