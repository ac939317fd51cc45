//! Token feature templates.

use crate::ingest::{Sentence, Token};
use crate::weaksup::{version_at, KbAliasDictionary};

/// Identifier of the template list below, stored in model files.
pub const FEATURE_TEMPLATE_ID: &str = "swkg-features-v1";

const WINDOW: isize = 2;

/// Character shape: uppercase → `X`, lowercase → `x`, digit → `d`, other kept.
pub fn word_shape(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_ascii_digit() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

/// Shape with repeated characters collapsed (`Xxxxx` → `Xx`).
pub fn short_shape(word: &str) -> String {
    let mut out = String::new();
    for c in word_shape(word).chars() {
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct FeatureExtractor {
    pub dictionary: KbAliasDictionary,
}

/// Dictionary position of each token: none, begin or inside of a longest match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DictPos {
    None,
    Begin,
    Inside,
}

impl FeatureExtractor {
    pub fn new(dictionary: KbAliasDictionary) -> Self {
        FeatureExtractor { dictionary }
    }

    fn dict_positions(&self, tokens: &[Token]) -> Vec<DictPos> {
        let mut pos = vec![DictPos::None; tokens.len()];
        for (s, e) in self.dictionary.longest_matches(tokens) {
            pos[s] = DictPos::Begin;
            for p in &mut pos[s + 1..e] {
                *p = DictPos::Inside;
            }
        }
        pos
    }

    fn local(
        &self,
        tokens: &[Token],
        dict: &[DictPos],
        i: usize,
        out: &mut Vec<String>,
        prefix: &str,
    ) {
        let t = &tokens[i];
        let lower = t.surface.to_lowercase();
        out.push(format!("{prefix}w={lower}"));
        out.push(format!("{prefix}shape={}", word_shape(&t.surface)));
        out.push(format!("{prefix}sshape={}", short_shape(&t.surface)));
        if t.surface.chars().any(|c| c.is_ascii_digit()) {
            out.push(format!("{prefix}digit"));
        }
        if i > 0 && t.is_capitalized() {
            out.push(format!("{prefix}capmid"));
        }
        match dict[i] {
            DictPos::None => {}
            DictPos::Begin => {
                out.push(format!("{prefix}dict"));
                out.push(format!("{prefix}dict=B"));
            }
            DictPos::Inside => {
                out.push(format!("{prefix}dict"));
                out.push(format!("{prefix}dict=I"));
            }
        }
        if version_at(tokens, i) {
            out.push(format!("{prefix}version"));
        }
    }

    /// Features of token `i`.
    pub fn extract_features(&self, s: &Sentence, i: usize) -> Vec<String> {
        let dict = self.dict_positions(&s.tokens);
        self.token_features(&s.tokens, &dict, i)
    }

    fn token_features(&self, tokens: &[Token], dict: &[DictPos], i: usize) -> Vec<String> {
        let mut out = vec!["bias".to_string()];
        self.local(tokens, dict, i, &mut out, "");
        let lower: Vec<char> = tokens[i].surface.to_lowercase().chars().collect();
        for n in 2..=4 {
            if lower.len() >= n {
                out.push(format!("p{n}={}", lower[..n].iter().collect::<String>()));
                out.push(format!(
                    "s{n}={}",
                    lower[lower.len() - n..].iter().collect::<String>()
                ));
            }
        }
        let lo = i.saturating_sub(WINDOW as usize);
        let hi = (i + WINDOW as usize).min(tokens.len() - 1);
        if (lo..=hi).any(|j| j != i && version_at(tokens, j)) {
            out.push("vnear".to_string());
        }
        for off in -WINDOW..=WINDOW {
            if off == 0 {
                continue;
            }
            let j = i as isize + off;
            let prefix = format!("{off:+}:");
            if j < 0 {
                out.push(format!("{prefix}BOS"));
            } else if j as usize >= tokens.len() {
                out.push(format!("{prefix}EOS"));
            } else {
                self.local(tokens, dict, j as usize, &mut out, &prefix);
            }
        }
        out
    }

    /// Features of every token.
    pub fn sentence_features(&self, s: &Sentence) -> Vec<Vec<String>> {
        let dict = self.dict_positions(&s.tokens);
        (0..s.len())
            .map(|i| self.token_features(&s.tokens, &dict, i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weaksup::english_words;

    fn fx() -> FeatureExtractor {
        FeatureExtractor::new(KbAliasDictionary::from_entries(
            [("Q1", "SPSS", "en")],
            &english_words(Vec::<&str>::new()),
        ))
    }

    #[test]
    fn shapes() {
        assert_eq!(word_shape("SPSS"), "XXXX");
        assert_eq!(word_shape("the"), "xxx");
        assert_eq!(word_shape("v17.0"), "xdd.d");
        assert_eq!(short_shape("Matlab"), "Xx");
    }

    #[test]
    fn spss_mid_sentence() {
        let s = Sentence::from_surfaces("d", 0, &["We", "used", "SPSS", "software"]);
        let f = fx().extract_features(&s, 2);
        for expected in [
            "w=spss",
            "shape=XXXX",
            "dict",
            "dict=B",
            "capmid",
            "bias",
            "-1:w=used",
            "+1:w=software",
            "-2:w=we",
            "+2:EOS",
        ] {
            assert!(
                f.contains(&expected.to_string()),
                "{expected} missing from {f:?}"
            );
        }
    }

    #[test]
    fn plain_word_has_no_dictionary_hit() {
        let s = Sentence::from_surfaces("d", 0, &["We", "used", "the", "tool"]);
        let f = fx().extract_features(&s, 2);
        assert!(f.contains(&"w=the".to_string()));
        assert!(f.contains(&"shape=xxx".to_string()));
        assert!(!f.iter().any(|x| x == "dict" || x == "dict=B"));
    }

    #[test]
    fn first_token_is_not_capitalized_mid_sentence() {
        let s = Sentence::from_surfaces("d", 0, &["SPSS", "was", "used"]);
        let f = fx().extract_features(&s, 0);
        assert!(!f.contains(&"capmid".to_string()));
        assert!(f.contains(&"-1:BOS".to_string()));
    }

    #[test]
    fn version_nearby() {
        let s = Sentence::from_surfaces("d", 0, &["SPSS", "v17.0", "was", "used", "here"]);
        assert!(fx().extract_features(&s, 0).contains(&"vnear".to_string()));
        assert!(!fx().extract_features(&s, 4).contains(&"vnear".to_string()));
    }
}
