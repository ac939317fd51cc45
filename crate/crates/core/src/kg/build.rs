use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::model::{Iri, Term, Triple, TripleGraph};
use super::vocab::*;
use crate::disambig::{cluster_index, Enrichment, MentionCluster};
use crate::error::{Error, Result};
use crate::ingest::Document;
use crate::tagger::Mention;

/// Bases for minted and external IRIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KgConfig {
    pub resource_base: String,
    /// Prefix for KB ids in `schema:sameAs`.
    pub kb_base: String,
    /// Prefix for a publication's external graph id when it is not already an IRI.
    pub same_as_base: String,
}

impl Default for KgConfig {
    fn default() -> Self {
        KgConfig {
            resource_base: "https://swkg.example.org/resource/".into(),
            kb_base: "http://dbpedia.org/resource/".into(),
            same_as_base: "https://makg.org/entity/".into(),
        }
    }
}

const WIKIDATA: &str = "http://www.wikidata.org/entity/";
const WIKIPEDIA: &str = "https://en.wikipedia.org/wiki/";
const SWO: &str = "http://www.ebi.ac.uk/swo/";

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Builder<'a> {
    cfg: &'a KgConfig,
    g: TripleGraph,
}

impl Builder<'_> {
    /// `base/kind/<first 16 hex digits of sha256(kind 0x1f key)>`.
    fn mint(&self, kind: &str, key: &str) -> Iri {
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        h.update([0x1f]);
        h.update(key.as_bytes());
        let digest = h.finalize();
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Iri::known(&format!("{}{kind}/{hex}", self.cfg.resource_base))
    }

    fn add(&mut self, s: &Iri, p: &str, o: impl Into<Term>) {
        self.g.insert(Triple::new(s.clone(), Iri::known(p), o));
    }

    fn typed(&mut self, s: &Iri, class: &str) {
        self.add(s, RDF_TYPE, Iri::known(class));
    }

    fn organization(&mut self, name: &str) -> Iri {
        let name = collapse_ws(name);
        let iri = self.mint("organization", &name.to_lowercase());
        self.typed(&iri, SCHEMA_ORGANIZATION);
        self.add(&iri, SCHEMA_NAME, Term::string(name));
        iri
    }

    fn external(&self, base: &str, id: &str) -> Result<Iri> {
        Iri::new(id).or_else(|_| Iri::new(format!("{base}{}", id.replace(' ', "_"))))
    }

    fn publication(&mut self, doc: &Document) -> Result<Iri> {
        if doc.id.trim().is_empty() {
            return Err(Error::MissingKey(format!(
                "publication from `{}`",
                doc.source_path
            )));
        }
        let p = self.mint("publication", &doc.id);
        self.typed(&p, SCHEMA_ARTICLE);
        if !doc.title.trim().is_empty() {
            self.add(&p, SCHEMA_NAME, Term::string(collapse_ws(&doc.title)));
        }
        if let Some(doi) = &doc.doi {
            self.add(&p, SCHEMA_IDENTIFIER, Term::string(doi.clone()));
        }
        if let Some(publisher) = &doc.publisher {
            let o = self.organization(publisher);
            self.add(&p, SCHEMA_PUBLISHER, o);
        }
        if let Some(year) = doc.year {
            self.add(&p, DC_DATE, Term::typed(format!("{year:04}"), XSD_GYEAR));
        }
        if let Some(date) = &doc.date {
            self.add(
                &p,
                SCHEMA_DATE_PUBLISHED,
                Term::typed(date.clone(), XSD_DATE),
            );
        }
        if let Some(id) = &doc.same_as {
            let o = self.external(&self.cfg.same_as_base, id)?;
            self.add(&p, SCHEMA_SAME_AS, o);
        }
        for a in &doc.authors {
            let name = collapse_ws(&a.name);
            if name.is_empty() {
                return Err(Error::MissingKey(format!(
                    "author name in publication `{}`",
                    doc.id
                )));
            }
            let key = format!(
                "{}\u{1f}{}",
                name.to_lowercase(),
                a.orcid.as_deref().unwrap_or("")
            );
            let person = self.mint("author", &key);
            self.typed(&person, SCHEMA_PERSON);
            self.add(&person, SCHEMA_NAME, Term::string(name));
            if let Some(orcid) = &a.orcid {
                self.add(&person, SCHEMA_IDENTIFIER, Term::string(orcid.clone()));
            }
            if let Some(aff) = &a.affiliation {
                let o = self.organization(aff);
                self.add(&person, SCHEMA_AFFILIATION, o);
            }
            self.add(&p, SCHEMA_AUTHOR, person);
        }
        Ok(p)
    }

    fn software(&mut self, c: &MentionCluster, enrichment: Option<&Enrichment>) -> Result<Iri> {
        let key = match &c.kb_id {
            Some(id) => format!("kb:{id}"),
            None => format!("nf:{}", c.normal_form),
        };
        let s = self.mint("software", &key);
        self.typed(&s, SCHEMA_SOFTWARE);
        self.add(&s, SCHEMA_NAME, Term::string(c.representative_name.clone()));
        if let Some(id) = &c.kb_id {
            let o = self.external(&self.cfg.kb_base, id)?;
            self.add(&s, SCHEMA_SAME_AS, o);
        }
        let Some(e) = enrichment.and_then(|e| e.for_cluster(c)) else {
            return Ok(s);
        };
        for (base, id) in [
            (WIKIDATA, &e.wikidata_id),
            (WIKIPEDIA, &e.wikipedia_id),
            (SWO, &e.software_ontology_id),
        ] {
            if let Some(id) = id {
                let o = self.external(base, id)?;
                self.add(&s, SCHEMA_SAME_AS, o);
            }
        }
        if let Some(url) = &e.url {
            self.add(&s, SCHEMA_URL, Iri::new(url.clone())?);
        }
        if let Some(m) = &e.manufacturer {
            let o = self.organization(m);
            self.add(&s, SCHEMA_PUBLISHER, o);
        }
        if let Some(l) = &e.license {
            self.add(&s, SCHEMA_LICENSE, Term::string(l.clone()));
        }
        if let Some(f) = e.is_free {
            self.add(&s, SKG_FREE, Term::typed(f.to_string(), XSD_BOOLEAN));
        }
        if let Some(f) = e.is_source_available {
            self.add(
                &s,
                SKG_SOURCE_AVAILABLE,
                Term::typed(f.to_string(), XSD_BOOLEAN),
            );
        }
        Ok(s)
    }
}

/// Materializes publications, mentions and software into triples. IRIs are
/// minted from content hashes of each resource's natural key.
pub fn build_graph(
    docs: &[Document],
    mentions: &[Mention],
    clusters: &[MentionCluster],
    enrichment: Option<&Enrichment>,
    cfg: &KgConfig,
) -> Result<TripleGraph> {
    let mut b = Builder {
        cfg,
        g: TripleGraph::new(),
    };
    let mut pubs: HashMap<&str, Iri> = HashMap::new();
    for d in docs {
        let iri = b.publication(d)?;
        pubs.insert(d.id.as_str(), iri);
    }
    let mut software = Vec::with_capacity(clusters.len());
    for c in clusters {
        software.push(b.software(c, enrichment)?);
    }
    let by_surface = cluster_index(clusters);
    for m in mentions {
        let p = pubs
            .get(m.doc_id.as_str())
            .ok_or_else(|| {
                Error::MissingKey(format!(
                    "publication `{}` referenced by a mention",
                    m.doc_id
                ))
            })?
            .clone();
        let node = b.mint(
            "mention",
            &format!("{}\u{1f}{}\u{1f}{}", m.doc_id, m.start, m.end),
        );
        b.typed(&node, NIF_STRING);
        b.add(&node, NIF_IS_STRING, Term::string(m.surface.clone()));
        b.add(
            &node,
            NIF_BEGIN,
            Term::typed(m.start.to_string(), XSD_NON_NEGATIVE_INTEGER),
        );
        b.add(
            &node,
            NIF_END,
            Term::typed(m.end.to_string(), XSD_NON_NEGATIVE_INTEGER),
        );
        if let Some(&ci) = by_surface.get(m.surface.as_str()) {
            b.add(&node, SKG_SOFTWARE, software[ci].clone());
        }
        b.add(&p, SCHEMA_MENTIONS, node);
    }
    Ok(b.g)
}
