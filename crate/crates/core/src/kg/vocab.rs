//! Namespaces and terms of the graph's data model.

pub const SCHEMA: &str = "http://schema.org/";
pub const SKG: &str = "http://data.gesis.org/softwarekg/";
pub const NIF: &str = "http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#";
pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const DC: &str = "http://purl.org/dc/elements/1.1/";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Built-in prefix table, sorted by prefix.
pub const PREFIXES: [(&str, &str); 6] = [
    ("dc", DC),
    ("nif", NIF),
    ("rdf", RDF),
    ("schema", SCHEMA),
    ("skg", SKG),
    ("xsd", XSD),
];

macro_rules! terms {
    ($($name:ident = $ns:literal $local:literal;)*) => {
        $(pub const $name: &str = concat!($ns, $local);)*
    };
}

terms! {
    RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#" "type";

    SCHEMA_SOFTWARE = "http://schema.org/" "SoftwareApplication";
    SCHEMA_ARTICLE = "http://schema.org/" "ScholarlyArticle";
    SCHEMA_PERSON = "http://schema.org/" "Person";
    SCHEMA_ORGANIZATION = "http://schema.org/" "Organization";
    NIF_STRING = "http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#" "String";

    SCHEMA_NAME = "http://schema.org/" "name";
    SCHEMA_AUTHOR = "http://schema.org/" "author";
    SCHEMA_IDENTIFIER = "http://schema.org/" "identifier";
    SCHEMA_PUBLISHER = "http://schema.org/" "publisher";
    SCHEMA_DATE_PUBLISHED = "http://schema.org/" "datePublished";
    SCHEMA_SAME_AS = "http://schema.org/" "sameAs";
    SCHEMA_MENTIONS = "http://schema.org/" "mentions";
    SCHEMA_URL = "http://schema.org/" "url";
    SCHEMA_LICENSE = "http://schema.org/" "license";
    SCHEMA_AFFILIATION = "http://schema.org/" "affiliation";
    DC_DATE = "http://purl.org/dc/elements/1.1/" "date";
    NIF_IS_STRING = "http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#" "isString";
    NIF_BEGIN = "http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#" "beginIndex";
    NIF_END = "http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#" "endIndex";
    SKG_SOFTWARE = "http://data.gesis.org/softwarekg/" "software";
    SKG_FREE = "http://data.gesis.org/softwarekg/" "isFree";
    SKG_SOURCE_AVAILABLE = "http://data.gesis.org/softwarekg/" "isSourceAvailable";

    XSD_STRING = "http://www.w3.org/2001/XMLSchema#" "string";
    XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#" "integer";
    XSD_BOOLEAN = "http://www.w3.org/2001/XMLSchema#" "boolean";
    XSD_DATE = "http://www.w3.org/2001/XMLSchema#" "date";
    XSD_GYEAR = "http://www.w3.org/2001/XMLSchema#" "gYear";
    XSD_NON_NEGATIVE_INTEGER = "http://www.w3.org/2001/XMLSchema#" "nonNegativeInteger";
}

/// Resource classes of the data model.
pub const CLASSES: [&str; 5] = [
    SCHEMA_ARTICLE,
    SCHEMA_SOFTWARE,
    SCHEMA_PERSON,
    SCHEMA_ORGANIZATION,
    NIF_STRING,
];

/// Every predicate the graph builder emits.
pub const PROPERTIES: [&str; 18] = [
    RDF_TYPE,
    SCHEMA_NAME,
    SCHEMA_AUTHOR,
    SCHEMA_IDENTIFIER,
    SCHEMA_PUBLISHER,
    SCHEMA_DATE_PUBLISHED,
    SCHEMA_SAME_AS,
    SCHEMA_MENTIONS,
    SCHEMA_URL,
    SCHEMA_LICENSE,
    SCHEMA_AFFILIATION,
    DC_DATE,
    NIF_IS_STRING,
    NIF_BEGIN,
    NIF_END,
    SKG_SOFTWARE,
    SKG_FREE,
    SKG_SOURCE_AVAILABLE,
];

/// Namespace IRI of a prefix.
pub fn namespace(prefix: &str) -> Option<&'static str> {
    PREFIXES
        .iter()
        .find(|(p, _)| *p == prefix)
        .map(|(_, ns)| *ns)
}

/// `prefix:local` form when a namespace matches and the local part is non-empty.
pub fn compact(iri: &str) -> Option<String> {
    PREFIXES
        .iter()
        .filter_map(|(p, ns)| iri.strip_prefix(ns).map(|local| (p, local)))
        .filter(|(_, local)| !local.is_empty() && !local.starts_with("//"))
        .max_by_key(|(p, _)| namespace(p).map_or(0, str::len))
        .map(|(p, local)| format!("{p}:{local}"))
}
