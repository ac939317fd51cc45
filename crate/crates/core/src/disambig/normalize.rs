use crate::ingest::{stem, StopWords};
use crate::weaksup::is_version_token;

pub const DEFAULT_SYLLABLES: [&str; 3] = ["pro", "plus", "lite"];

fn is_greek(c: char) -> bool {
    matches!(c, '\u{0370}'..='\u{03FF}' | '\u{1F00}'..='\u{1FFF}')
}

/// Name normalization and abbreviation settings.
#[derive(Debug, Clone)]
pub struct Normalizer {
    /// Marketing syllables dropped from the end of a name.
    pub syllables: Vec<String>,
    pub stopwords: StopWords,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            syllables: DEFAULT_SYLLABLES.iter().map(|s| s.to_string()).collect(),
            stopwords: StopWords::english(),
        }
    }
}

impl Normalizer {
    /// Case-folded, stripped and stemmed form of a surface.
    pub fn normalize(&self, surface: &str) -> String {
        let folded = surface.to_lowercase();
        let mut words: Vec<String> = Vec::new();
        for raw in folded.split_whitespace() {
            if is_version_token(raw) {
                continue;
            }
            let cleaned: String = raw
                .chars()
                .map(|c| {
                    if c.is_alphabetic() && !is_greek(c) {
                        c
                    } else {
                        ' '
                    }
                })
                .collect();
            words.extend(cleaned.split_whitespace().map(stem));
        }
        let syllables: Vec<String> = self
            .syllables
            .iter()
            .map(|s| stem(&s.to_lowercase()))
            .collect();
        while words.len() > 1 && syllables.contains(words.last().expect("non-empty")) {
            words.pop();
        }
        if words.is_empty() {
            folded
        } else {
            words.join(" ")
        }
    }

    /// Initials of the non-stopword words, uppercased; one word is uppercased whole.
    pub fn abbreviate(&self, surface: &str) -> String {
        let words: Vec<&str> = surface
            .split(|c: char| c.is_whitespace() || c == '-' || c == '/')
            .filter(|w| w.chars().next().is_some_and(char::is_alphabetic))
            .collect();
        if words.len() <= 1 {
            return words
                .first()
                .copied()
                .unwrap_or(surface)
                .trim()
                .to_uppercase();
        }
        words
            .iter()
            .filter(|w| !self.stopwords.contains(w))
            .filter_map(|w| w.chars().next())
            .flat_map(char::to_uppercase)
            .collect()
    }
}

/// [`Normalizer::normalize`] with default settings.
pub fn normalize_mention(surface: &str) -> String {
    Normalizer::default().normalize(surface)
}

/// [`Normalizer::abbreviate`] with default settings.
pub fn make_abbreviation(surface: &str) -> String {
    Normalizer::default().abbreviate(surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_variants_collapse() {
        assert_eq!(normalize_mention("MATLAB"), "matlab");
        assert_eq!(normalize_mention("Matlab"), "matlab");
        assert_eq!(normalize_mention("R"), "r");
    }

    #[test]
    fn long_name_is_stemmed() {
        assert_eq!(
            normalize_mention("Statistical Package for the Social Sciences"),
            "statist packag for the social scienc"
        );
        assert_eq!(
            normalize_mention("statistic"),
            normalize_mention("statistical")
        );
    }

    #[test]
    fn strips_versions_greek_and_syllables() {
        assert_eq!(normalize_mention("GraphPad Prism 7"), "graphpad prism");
        assert_eq!(normalize_mention("SPSS v23"), "spss");
        assert_eq!(normalize_mention("αLab"), "lab");
        assert_eq!(normalize_mention("Nvivo Pro"), "nvivo");
        assert_eq!(normalize_mention("R2"), "r");
        assert_eq!(normalize_mention("Pro"), "pro");
        assert_eq!(normalize_mention("3.1"), "3.1");
    }

    #[test]
    fn abbreviations() {
        assert_eq!(
            make_abbreviation("Statistical Package for the Social Sciences"),
            "SPSS"
        );
        assert_eq!(make_abbreviation("Analysis of Moment Structures"), "AMS");
        assert_eq!(make_abbreviation("Stata"), "STATA");
        assert_eq!(make_abbreviation("SPSS"), "SPSS");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "[A-Za-z0-9 .\\-αβ]{1,30}") {
            let once = normalize_mention(&s);
            prop_assert_eq!(normalize_mention(&once), once);
        }

        #[test]
        fn abbreviation_of_single_token_is_fixed(s in "[A-Za-z]{1,12}") {
            let a = make_abbreviation(&s);
            prop_assert_eq!(make_abbreviation(&a), a);
        }
    }
}
