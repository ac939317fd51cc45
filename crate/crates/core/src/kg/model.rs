use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::vocab::{RDF_TYPE, XSD_STRING};
use crate::error::{Error, Result};

/// Absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Iri(String);

fn valid_scheme(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Iri> {
        let value = value.into();
        let ok = match value.split_once(':') {
            Some((scheme, rest)) => {
                valid_scheme(scheme)
                    && !rest.is_empty()
                    && !value.chars().any(|c| {
                        c.is_control()
                            || c.is_whitespace()
                            || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
                    })
            }
            None => false,
        };
        if ok {
            Ok(Iri(value))
        } else {
            Err(Error::InvalidIri(value))
        }
    }

    /// For compile-time vocabulary constants.
    pub(crate) fn known(value: &str) -> Iri {
        Iri::new(value).expect("vocabulary IRI is valid")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Iri(Iri),
    Literal { value: String, datatype: Iri },
}

impl Term {
    pub fn string(value: impl Into<String>) -> Term {
        Term::Literal {
            value: value.into(),
            datatype: Iri::known(XSD_STRING),
        }
    }

    pub fn typed(value: impl Into<String>, datatype: &str) -> Term {
        Term::Literal {
            value: value.into(),
            datatype: Iri::known(datatype),
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            Term::Literal { .. } => None,
        }
    }

    /// Lexical value: the IRI string or the literal's value.
    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(i) => i.as_str(),
            Term::Literal { value, .. } => value,
        }
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Term {
        Term::Iri(i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Triple {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

/// Triple set with subject, predicate and object indexes.
#[derive(Debug, Clone, Default)]
pub struct TripleGraph {
    triples: Vec<Triple>,
    set: HashSet<Triple>,
    by_subject: HashMap<Iri, Vec<usize>>,
    by_predicate: HashMap<Iri, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
}

impl PartialEq for TripleGraph {
    fn eq(&self, other: &Self) -> bool {
        self.set == other.set
    }
}

impl Eq for TripleGraph {}

impl FromIterator<Triple> for TripleGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = TripleGraph::new();
        for t in iter {
            g.insert(t);
        }
        g
    }
}

impl TripleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.set.contains(&t) {
            return false;
        }
        let i = self.triples.len();
        self.by_subject
            .entry(t.subject.clone())
            .or_default()
            .push(i);
        self.by_predicate
            .entry(t.predicate.clone())
            .or_default()
            .push(i);
        self.by_object.entry(t.object.clone()).or_default().push(i);
        self.set.insert(t.clone());
        self.triples.push(t);
        true
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.set.contains(t)
    }

    /// Triples in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Triples in sorted order.
    pub fn sorted(&self) -> Vec<&Triple> {
        let mut v: Vec<&Triple> = self.triples.iter().collect();
        v.sort();
        v
    }

    fn candidates(&self, s: Option<&Iri>, p: Option<&Iri>, o: Option<&Term>) -> Option<&[usize]> {
        const EMPTY: &[usize] = &[];
        let lists = [
            s.map(|s| self.by_subject.get(s).map_or(EMPTY, Vec::as_slice)),
            p.map(|p| self.by_predicate.get(p).map_or(EMPTY, Vec::as_slice)),
            o.map(|o| self.by_object.get(o).map_or(EMPTY, Vec::as_slice)),
        ];
        lists.into_iter().flatten().min_by_key(|l| l.len())
    }

    /// Upper bound on the matches of a pattern, from the smallest index list.
    pub fn estimate(&self, s: Option<&Iri>, p: Option<&Iri>, o: Option<&Term>) -> usize {
        self.candidates(s, p, o).map_or(self.len(), <[usize]>::len)
    }

    /// Triples matching a pattern; `None` is a wildcard.
    pub fn matching<'a, 'b>(
        &'a self,
        s: Option<&'b Iri>,
        p: Option<&'b Iri>,
        o: Option<&'b Term>,
    ) -> Box<dyn Iterator<Item = &'a Triple> + 'b>
    where
        'a: 'b,
    {
        let keep = move |t: &&Triple| {
            s.is_none_or(|s| &t.subject == s)
                && p.is_none_or(|p| &t.predicate == p)
                && o.is_none_or(|o| &t.object == o)
        };
        match self.candidates(s, p, o) {
            Some(ix) => Box::new(ix.iter().map(|&i| &self.triples[i]).filter(keep)),
            None => Box::new(self.triples.iter()),
        }
    }

    /// Objects of `(s, p, ?)`, sorted.
    pub fn objects(&self, s: &Iri, p: &Iri) -> Vec<&Term> {
        let mut v: Vec<&Term> = self
            .matching(Some(s), Some(p), None)
            .map(|t| &t.object)
            .collect();
        v.sort();
        v
    }

    /// Number of resources per `rdf:type`.
    pub fn type_census(&self) -> BTreeMap<Iri, usize> {
        let mut out = BTreeMap::new();
        let ty = Iri::known(RDF_TYPE);
        for t in self.matching(None, Some(&ty), None) {
            if let Term::Iri(c) = &t.object {
                *out.entry(c.clone()).or_insert(0) += 1;
            }
        }
        out
    }

    /// Number of triples per predicate.
    pub fn property_census(&self) -> BTreeMap<Iri, usize> {
        let mut out = BTreeMap::new();
        for t in &self.triples {
            *out.entry(t.predicate.clone()).or_insert(0) += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn iri_validation() {
        assert!(Iri::new("http://schema.org/name").is_ok());
        assert!(Iri::new("urn:x").is_ok());
        for bad in ["name", "http://a b", "1x:y", "x:", "http://a<b"] {
            assert!(Iri::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn set_semantics_and_indexes() {
        let mut g = TripleGraph::new();
        let t = Triple::new(iri("urn:s"), iri("urn:p"), Term::string("x"));
        assert!(g.insert(t.clone()));
        assert!(!g.insert(t.clone()));
        g.insert(Triple::new(iri("urn:s"), iri("urn:q"), iri("urn:o")));
        g.insert(Triple::new(iri("urn:t"), iri("urn:p"), iri("urn:o")));
        assert_eq!(g.len(), 3);
        assert_eq!(g.matching(Some(&iri("urn:s")), None, None).count(), 2);
        assert_eq!(g.matching(None, Some(&iri("urn:p")), None).count(), 2);
        assert_eq!(
            g.matching(None, None, Some(&Term::Iri(iri("urn:o"))))
                .count(),
            2
        );
        assert_eq!(
            g.matching(Some(&iri("urn:t")), Some(&iri("urn:q")), None)
                .count(),
            0
        );
        assert_eq!(
            g.estimate(Some(&iri("urn:t")), Some(&iri("urn:p")), None),
            1
        );
        assert_eq!(g.matching(None, None, None).count(), 3);
    }
}
