use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::MentionCluster;
use crate::error::{Error, Result};

/// Curated metadata for one software. Rows are keyed by `name`
/// (representative name) and optionally `kb_id`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SoftwareEnrichment {
    pub name: String,
    pub kb_id: Option<String>,
    pub software_ontology_id: Option<String>,
    pub wikidata_id: Option<String>,
    pub wikipedia_id: Option<String>,
    pub url: Option<String>,
    pub manufacturer: Option<String>,
    pub is_free: Option<bool>,
    pub is_source_available: Option<bool>,
    pub license: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Enrichment {
    by_name: BTreeMap<String, SoftwareEnrichment>,
    by_kb: BTreeMap<String, String>,
}

impl Enrichment {
    pub fn new(rows: Vec<SoftwareEnrichment>) -> Result<Self> {
        let mut e = Enrichment::default();
        for r in rows {
            if r.name.is_empty() {
                return Err(Error::Config("enrichment row without name".into()));
            }
            if r.license.is_some() && r.is_source_available != Some(true) {
                return Err(Error::Config(format!(
                    "enrichment for `{}` has a license but is_source_available is not true",
                    r.name
                )));
            }
            if let Some(kb) = &r.kb_id {
                e.by_kb.insert(kb.clone(), r.name.clone());
            }
            if e.by_name.insert(r.name.clone(), r).is_some() {
                return Err(Error::Config("duplicate enrichment name".into()));
            }
        }
        Ok(e)
    }

    /// Tab-separated with a header row naming the fields.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<SoftwareEnrichment>().enumerate() {
            let row = rec.map_err(|e| Error::format(source, i + 2, e.to_string()))?;
            rows.push(row);
        }
        Enrichment::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Enrichment::parse(
            &crate::error::read_to_string(path)?,
            &path.display().to_string(),
        )
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &SoftwareEnrichment> {
        self.by_name.values()
    }

    /// Row for a cluster: by KB id first, then by representative name.
    pub fn for_cluster(&self, c: &MentionCluster) -> Option<&SoftwareEnrichment> {
        c.kb_id
            .as_ref()
            .and_then(|id| self.by_kb.get(id))
            .and_then(|n| self.by_name.get(n))
            .or_else(|| self.by_name.get(&c.representative_name))
    }
}
