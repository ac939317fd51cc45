use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

pub const KB_LANGUAGES: [&str; 4] = ["en", "de", "fr", "es"];
const EXCLUDED_TYPE: &str = "video game";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KbEntry {
    pub id: String,
    pub label: String,
    /// `(alias, language)`.
    pub aliases: Vec<(String, String)>,
    pub redirects: Vec<String>,
    pub disambiguates: Vec<String>,
    pub developer: Option<String>,
    pub type_tags: BTreeSet<String>,
    pub replaced_by: Vec<String>,
}

/// A loaded KB export, entries sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Kb {
    pub entries: Vec<KbEntry>,
}

impl Kb {
    pub fn new(mut entries: Vec<KbEntry>) -> Self {
        entries.retain(|e| {
            !e.type_tags
                .iter()
                .any(|t| t.eq_ignore_ascii_case(EXCLUDED_TYPE))
        });
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        Kb { entries }
    }

    pub fn get(&self, id: &str) -> Option<&KbEntry> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// `(old_id, new_id)` pairs of the replaced-by relation.
    pub fn replaced_by_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self
            .entries
            .iter()
            .flat_map(|e| e.replaced_by.iter().map(move |n| (e.id.clone(), n.clone())))
            .collect();
        out.sort();
        out
    }

    /// Parses `id \t kind \t value [\t language]` lines. Kinds: label, alias,
    /// redirect, disambiguate, developer, type, replaced_by. Aliases outside
    /// the four KB languages are dropped; a missing language means `en`.
    pub fn parse(text: &str, source: &str) -> Result<Kb> {
        let mut entries: BTreeMap<String, (usize, KbEntry)> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 || cols.len() > 4 {
                return Err(Error::format(
                    source,
                    line_no,
                    "expected `id\\tkind\\tvalue[\\tlanguage]`",
                ));
            }
            let (id, kind, value) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if id.is_empty() || value.is_empty() {
                return Err(Error::format(source, line_no, "empty id or value"));
            }
            let lang = cols
                .get(3)
                .map(|l| l.trim())
                .filter(|l| !l.is_empty())
                .unwrap_or("en");
            let (_, e) = entries.entry(id.to_string()).or_insert_with(|| {
                (
                    line_no,
                    KbEntry {
                        id: id.to_string(),
                        ..KbEntry::default()
                    },
                )
            });
            match kind {
                "label" => {
                    if lang == "en" || e.label.is_empty() {
                        e.label = value.to_string();
                    }
                }
                "alias" => {
                    if KB_LANGUAGES.contains(&lang) {
                        e.aliases.push((value.to_string(), lang.to_string()));
                    }
                }
                "redirect" => e.redirects.push(value.to_string()),
                "disambiguate" => e.disambiguates.push(value.to_string()),
                "developer" => e.developer = Some(value.to_string()),
                "type" => {
                    e.type_tags.insert(value.to_string());
                }
                "replaced_by" => e.replaced_by.push(value.to_string()),
                other => {
                    return Err(Error::format(
                        source,
                        line_no,
                        format!("unknown field kind `{other}`"),
                    ))
                }
            }
        }
        let mut out = Vec::with_capacity(entries.len());
        for (_, (first_line, e)) in entries {
            if e.label.is_empty() {
                return Err(Error::format(
                    source,
                    first_line,
                    format!("entry `{}` has no label", e.id),
                ));
            }
            out.push(e);
        }
        Ok(Kb::new(out))
    }

    pub fn load(path: &Path) -> Result<Kb> {
        Kb::parse(&read_to_string(path)?, &path.display().to_string())
    }
}
