//! Canned analyses over a built graph.

use std::collections::{BTreeMap, BTreeSet};

use super::exec::{count_term, execute, ResultTable};
use super::parser::parse_query;
use crate::disambig::Enrichment;
use crate::error::{Error, Result};
use crate::kg::vocab::{SCHEMA_NAME, SCHEMA_SAME_AS, SKG_FREE, SKG_SOURCE_AVAILABLE};
use crate::kg::{Iri, Term, TripleGraph};

/// Mentions per software name and publication year, keeping groups with more
/// than one mention, most frequent first.
pub const SOFTWARE_PER_YEAR: &str = "PREFIX schema: <http://schema.org/>
SELECT ?n ?y (count(?n) as ?count) WHERE {
    ?s rdf:type schema:SoftwareApplication .
    ?s <http://schema.org/name> ?n .
    ?m <http://data.gesis.org/softwarekg/software> ?s .
    ?p <http://schema.org/mentions> ?m .
    ?p <http://purl.org/dc/elements/1.1/date> ?y .
}
GROUP BY ?n ?y
HAVING (count(?n) > 1)
ORDER by DESC(?count)
";

const MENTIONS_BY_SOFTWARE_YEAR: &str = "PREFIX schema: <http://schema.org/>
PREFIX skg: <http://data.gesis.org/softwarekg/>
PREFIX dc: <http://purl.org/dc/elements/1.1/>
SELECT ?s ?d (COUNT(?m) AS ?c) WHERE {
    ?s a schema:SoftwareApplication .
    ?m skg:software ?s .
    ?p schema:mentions ?m .
    ?p dc:date ?d .
}
GROUP BY ?s ?d
";

/// Leading four digits of a date literal.
pub fn year_of(t: &Term) -> Option<i32> {
    let v = t.lexical();
    v.get(..4)
        .filter(|y| y.bytes().all(|b| b.is_ascii_digit()))?
        .parse()
        .ok()
}

/// `(software, year) → mentions`.
fn counts(g: &TripleGraph) -> BTreeMap<(Iri, i32), usize> {
    let ast = parse_query(MENTIONS_BY_SOFTWARE_YEAR).expect("built-in query parses");
    let mut out = BTreeMap::new();
    for r in execute(&ast, g).rows {
        let (Some(s), Some(y)) = (r[0].as_iri(), year_of(&r[1])) else {
            continue;
        };
        let n: usize = r[2].lexical().parse().expect("count is an integer");
        *out.entry((s.clone(), y)).or_insert(0) += n;
    }
    out
}

fn name_of(g: &TripleGraph, s: &Iri) -> String {
    g.objects(s, &Iri::known(SCHEMA_NAME))
        .first()
        .map_or_else(|| s.to_string(), |t| t.lexical().to_string())
}

fn year_term(y: i32) -> Term {
    Term::typed(format!("{y:04}"), crate::kg::vocab::XSD_GYEAR)
}

/// Mentions per software and year, rows ordered by software then year.
/// With `top_k`, only the k software with the most mentions overall.
pub fn mentions_per_year(g: &TripleGraph, top_k: Option<usize>) -> ResultTable {
    let mut by_name: BTreeMap<(String, i32), usize> = BTreeMap::new();
    for ((s, y), n) in counts(g) {
        *by_name.entry((name_of(g, &s), y)).or_insert(0) += n;
    }
    let keep: Option<BTreeSet<String>> = top_k.map(|k| {
        let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
        for ((name, _), n) in &by_name {
            *totals.entry(name).or_insert(0) += n;
        }
        let mut ranked: Vec<(&str, usize)> = totals.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked
            .into_iter()
            .take(k)
            .map(|(n, _)| n.to_string())
            .collect()
    });
    let mut t = ResultTable::new(vec!["software".into(), "year".into(), "mentions".into()]);
    for ((name, y), n) in by_name {
        if keep.as_ref().is_none_or(|k| k.contains(&name)) {
            t.rows
                .push(vec![Term::string(name), year_term(y), count_term(n)]);
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Availability {
    Commercial,
    Free,
    OpenSource,
    Unknown,
}

fn flag(g: &TripleGraph, s: &Iri, p: &str) -> Option<bool> {
    g.objects(s, &Iri::known(p))
        .first()
        .and_then(|t| t.lexical().parse().ok())
}

/// Yearly mentions by availability class. Open source takes precedence over
/// free; software without flags in the graph or the enrichment rows is unknown.
pub fn availability_trend(g: &TripleGraph, enrichment: Option<&Enrichment>) -> Result<ResultTable> {
    let enrichment = enrichment.ok_or(Error::MissingEnrichment)?;
    let by_name: BTreeMap<&str, _> = enrichment.rows().map(|r| (r.name.as_str(), r)).collect();
    let mut per_year: BTreeMap<i32, [usize; 4]> = BTreeMap::new();
    let mut class_cache: BTreeMap<Iri, Availability> = BTreeMap::new();
    for ((s, y), n) in counts(g) {
        let class = *class_cache.entry(s.clone()).or_insert_with(|| {
            let row = by_name.get(name_of(g, &s).as_str());
            let free = flag(g, &s, SKG_FREE).or_else(|| row.and_then(|r| r.is_free));
            let source = flag(g, &s, SKG_SOURCE_AVAILABLE)
                .or_else(|| row.and_then(|r| r.is_source_available));
            match (free, source) {
                (_, Some(true)) => Availability::OpenSource,
                (Some(true), _) => Availability::Free,
                (Some(false), _) => Availability::Commercial,
                _ => Availability::Unknown,
            }
        });
        per_year.entry(y).or_default()[class as usize] += n;
    }
    let mut t = ResultTable::new(
        [
            "year",
            "commercial",
            "free",
            "open_source",
            "unknown",
            "total",
        ]
        .map(String::from)
        .to_vec(),
    );
    for (y, c) in per_year {
        let mut row = vec![year_term(y)];
        row.extend(c.iter().map(|&n| count_term(n)));
        row.push(count_term(c.iter().sum()));
        t.rows.push(row);
    }
    Ok(t)
}

/// Side-by-side yearly mentions of each discontinued software and its
/// successor. KB ids are matched through `schema:sameAs <kb_base + id>`.
pub fn successor_analysis(
    g: &TripleGraph,
    replaced_by: &[(String, String)],
    kb_base: &str,
) -> ResultTable {
    let same_as = Iri::known(SCHEMA_SAME_AS);
    let software_for = |id: &str| -> Option<Iri> {
        let target = Term::Iri(Iri::new(format!("{kb_base}{}", id.replace(' ', "_"))).ok()?);
        let mut subjects: Vec<&Iri> = g
            .matching(None, Some(&same_as), Some(&target))
            .map(|t| &t.subject)
            .collect();
        subjects.sort();
        subjects.first().map(|s| (*s).clone())
    };
    let all = counts(g);
    let series = |s: &Option<Iri>| -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        if let Some(s) = s {
            for ((sw, y), n) in &all {
                if sw == s {
                    out.insert(*y, *n);
                }
            }
        }
        out
    };
    let mut t = ResultTable::new(
        [
            "predecessor",
            "successor",
            "year",
            "predecessor_mentions",
            "successor_mentions",
        ]
        .map(String::from)
        .to_vec(),
    );
    for (old, new) in replaced_by {
        let (so, sn) = (software_for(old), software_for(new));
        if so.is_none() && sn.is_none() {
            continue;
        }
        let name = |s: &Option<Iri>, id: &str| {
            s.as_ref().map_or_else(|| id.to_string(), |s| name_of(g, s))
        };
        let (no, nn) = (name(&so, old), name(&sn, new));
        let (a, b) = (series(&so), series(&sn));
        let years: BTreeSet<i32> = a.keys().chain(b.keys()).copied().collect();
        for y in years {
            t.rows.push(vec![
                Term::string(no.clone()),
                Term::string(nn.clone()),
                year_term(y),
                count_term(a.get(&y).copied().unwrap_or(0)),
                count_term(b.get(&y).copied().unwrap_or(0)),
            ]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disambig::SoftwareEnrichment;
    use crate::kg::vocab::*;
    use crate::kg::Triple;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    struct G(TripleGraph, usize);

    impl G {
        fn software(&mut self, s: &str, name: &str, kb: Option<&str>) {
            self.0
                .insert(Triple::new(iri(s), iri(RDF_TYPE), iri(SCHEMA_SOFTWARE)));
            self.0
                .insert(Triple::new(iri(s), iri(SCHEMA_NAME), Term::string(name)));
            if let Some(kb) = kb {
                self.0.insert(Triple::new(
                    iri(s),
                    iri(SCHEMA_SAME_AS),
                    iri(&format!("http://kb/{kb}")),
                ));
            }
        }

        fn mentions(&mut self, s: &str, year: i32, n: usize) {
            let p = format!("urn:pub:{year}");
            self.0.insert(Triple::new(
                iri(&p),
                iri(DC_DATE),
                Term::typed(year.to_string(), XSD_GYEAR),
            ));
            for _ in 0..n {
                self.1 += 1;
                let m = format!("urn:m:{}", self.1);
                self.0
                    .insert(Triple::new(iri(&m), iri(SKG_SOFTWARE), iri(s)));
                self.0
                    .insert(Triple::new(iri(&p), iri(SCHEMA_MENTIONS), iri(&m)));
            }
        }
    }

    fn cells(t: &ResultTable) -> Vec<Vec<String>> {
        t.rows
            .iter()
            .map(|r| r.iter().map(|c| c.lexical().to_string()).collect())
            .collect()
    }

    #[test]
    fn per_year_rows() {
        let mut g = G(TripleGraph::new(), 0);
        g.software("urn:sw:spss", "SPSS", None);
        g.mentions("urn:sw:spss", 2018, 2);
        g.mentions("urn:sw:spss", 2019, 3);
        let t = mentions_per_year(&g.0, None);
        assert_eq!(cells(&t), [["SPSS", "2018", "2"], ["SPSS", "2019", "3"]]);
        assert!(mentions_per_year(&TripleGraph::new(), Some(10))
            .rows
            .is_empty());
    }

    #[test]
    fn top_k_filters_software() {
        let mut g = G(TripleGraph::new(), 0);
        g.software("urn:sw:a", "A", None);
        g.software("urn:sw:b", "B", None);
        g.mentions("urn:sw:a", 2019, 1);
        g.mentions("urn:sw:b", 2019, 2);
        assert_eq!(
            cells(&mentions_per_year(&g.0, Some(1))),
            [["B", "2019", "2"]]
        );
    }

    #[test]
    fn availability_buckets() {
        let mut g = G(TripleGraph::new(), 0);
        g.software("urn:sw:r", "R", None);
        g.software("urn:sw:spss", "SPSS", None);
        g.software("urn:sw:x", "X", None);
        g.0.insert(Triple::new(
            iri("urn:sw:r"),
            iri(SKG_SOURCE_AVAILABLE),
            Term::typed("true", XSD_BOOLEAN),
        ));
        g.mentions("urn:sw:r", 2019, 2);
        g.mentions("urn:sw:spss", 2019, 1);
        g.mentions("urn:sw:x", 2020, 4);
        let e = Enrichment::new(vec![SoftwareEnrichment {
            name: "SPSS".into(),
            is_free: Some(false),
            ..Default::default()
        }])
        .unwrap();
        let t = availability_trend(&g.0, Some(&e)).unwrap();
        assert_eq!(
            cells(&t),
            [
                ["2019", "1", "0", "2", "0", "3"],
                ["2020", "0", "0", "0", "4", "4"]
            ]
        );
        assert!(matches!(
            availability_trend(&g.0, None),
            Err(Error::MissingEnrichment)
        ));
    }

    #[test]
    fn successor_series_align() {
        let mut g = G(TripleGraph::new(), 0);
        g.software("urn:sw:w", "WinBUGS", Some("Q1"));
        g.software("urn:sw:o", "OpenBUGS", Some("Q2"));
        g.mentions("urn:sw:w", 2010, 3);
        g.mentions("urn:sw:w", 2012, 1);
        g.mentions("urn:sw:o", 2012, 2);
        let pairs = [
            ("Q1".to_string(), "Q2".to_string()),
            ("Q8".to_string(), "Q9".to_string()),
        ];
        let t = successor_analysis(&g.0, &pairs, "http://kb/");
        assert_eq!(
            cells(&t),
            [
                ["WinBUGS", "OpenBUGS", "2010", "3", "0"],
                ["WinBUGS", "OpenBUGS", "2012", "1", "2"]
            ]
        );
    }
}
