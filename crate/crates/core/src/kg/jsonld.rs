use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::model::{Iri, Term, TripleGraph};
use super::vocab::{compact, PREFIXES, RDF_TYPE, XSD_STRING};

fn short(iri: &Iri) -> String {
    compact(iri.as_str()).unwrap_or_else(|| iri.as_str().to_string())
}

fn one_or_many(mut v: Vec<Value>) -> Value {
    if v.len() == 1 {
        v.pop().expect("one value")
    } else {
        Value::Array(v)
    }
}

/// Compacted JSON-LD: the prefix table as `@context` and one node object per
/// subject in `@graph`, sorted by IRI.
pub fn serialize_jsonld(g: &TripleGraph) -> String {
    let mut subjects: BTreeMap<&Iri, BTreeMap<&Iri, Vec<&Term>>> = BTreeMap::new();
    for t in g.iter() {
        subjects
            .entry(&t.subject)
            .or_default()
            .entry(&t.predicate)
            .or_default()
            .push(&t.object);
    }
    let mut nodes = Vec::with_capacity(subjects.len());
    for (s, props) in subjects {
        let mut node = Map::new();
        node.insert("@id".into(), Value::String(short(s)));
        let mut keyed: BTreeMap<String, Vec<Value>> = BTreeMap::new();
        for (p, mut objects) in props {
            objects.sort();
            let is_type = p.as_str() == RDF_TYPE;
            for o in objects {
                match o {
                    Term::Iri(i) if is_type => keyed
                        .entry("@type".into())
                        .or_default()
                        .push(Value::String(short(i))),
                    Term::Iri(i) => keyed
                        .entry(short(p))
                        .or_default()
                        .push(json!({ "@id": short(i) })),
                    Term::Literal { value, datatype } if datatype.as_str() == XSD_STRING => keyed
                        .entry(short(p))
                        .or_default()
                        .push(Value::String(value.clone())),
                    Term::Literal { value, datatype } => keyed
                        .entry(short(p))
                        .or_default()
                        .push(json!({ "@type": short(datatype), "@value": value })),
                }
            }
        }
        for (k, v) in keyed {
            node.insert(k, one_or_many(v));
        }
        nodes.push(Value::Object(node));
    }
    let context: Map<String, Value> = PREFIXES
        .iter()
        .map(|(p, ns)| ((*p).to_string(), Value::String((*ns).to_string())))
        .collect();
    let doc = json!({ "@context": context, "@graph": nodes });
    serde_json::to_string_pretty(&doc).expect("JSON serializes") + "\n"
}
