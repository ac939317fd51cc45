use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use crate::error::Result;
use crate::kg::vocab::XSD_INTEGER;
use crate::kg::{Iri, Term, TripleGraph};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Header row plus lexical values, RFC 4180 quoting.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Term::lexical))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Tab-separated text for terminals.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(Term::lexical).collect::<Vec<_>>().join("\t"));
            out.push('\n');
        }
        out
    }
}

const NUMERIC: [&str; 6] = [
    "integer",
    "decimal",
    "double",
    "float",
    "nonNegativeInteger",
    "int",
];

fn numeric_value(t: &Term) -> Option<f64> {
    match t {
        Term::Literal { value, datatype } => {
            let local = datatype
                .as_str()
                .strip_prefix("http://www.w3.org/2001/XMLSchema#")?;
            NUMERIC
                .contains(&local)
                .then(|| value.parse().ok())
                .flatten()
        }
        Term::Iri(_) => None,
    }
}

/// IRIs before literals; numeric literals by value; otherwise lexical then datatype.
pub fn cmp_terms(a: &Term, b: &Term) -> Ordering {
    match (a, b) {
        (Term::Iri(x), Term::Iri(y)) => x.cmp(y),
        (Term::Iri(_), Term::Literal { .. }) => Ordering::Less,
        (Term::Literal { .. }, Term::Iri(_)) => Ordering::Greater,
        _ => match (numeric_value(a), numeric_value(b)) {
            (Some(x), Some(y)) if x != y => x.total_cmp(&y),
            _ => a.cmp(b),
        },
    }
}

pub fn cmp_rows(a: &[Term], b: &[Term]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| cmp_terms(x, y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

pub(crate) fn count_term(n: usize) -> Term {
    Term::typed(n.to_string(), XSD_INTEGER)
}

type Binding = Vec<Option<Term>>;

struct Plan {
    vars: HashMap<String, usize>,
    order: Vec<usize>,
}

fn const_iri(t: &PatternTerm) -> Option<&Iri> {
    match t {
        PatternTerm::Const(Term::Iri(i)) => Some(i),
        _ => None,
    }
}

fn const_term(t: &PatternTerm) -> Option<&Term> {
    match t {
        PatternTerm::Const(c) => Some(c),
        PatternTerm::Var(_) => None,
    }
}

/// Greedy join order: patterns connected to already-bound variables first,
/// then ascending estimated cardinality, then textual order.
fn plan(ast: &QueryAst, g: &TripleGraph) -> Plan {
    let mut vars = HashMap::new();
    for p in &ast.patterns {
        for v in p.terms().into_iter().filter_map(PatternTerm::var) {
            let n = vars.len();
            vars.entry(v.to_string()).or_insert(n);
        }
    }
    let estimates: Vec<usize> = ast
        .patterns
        .iter()
        .map(|p| {
            g.estimate(
                const_iri(&p.subject),
                const_iri(&p.predicate),
                const_term(&p.object),
            )
        })
        .collect();
    let mut bound = vec![false; vars.len()];
    let mut remaining: Vec<usize> = (0..ast.patterns.len()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let any_bound = bound.iter().any(|b| *b);
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| {
                let connected = ast.patterns[i]
                    .terms()
                    .into_iter()
                    .filter_map(PatternTerm::var)
                    .any(|v| bound[vars[v]]);
                (any_bound && !connected, estimates[i], i)
            })
            .expect("non-empty");
        remaining.remove(pos);
        for v in ast.patterns[best]
            .terms()
            .into_iter()
            .filter_map(PatternTerm::var)
        {
            bound[vars[v]] = true;
        }
        order.push(best);
    }
    Plan { vars, order }
}

fn resolve<'a>(
    t: &'a PatternTerm,
    b: &'a Binding,
    vars: &HashMap<String, usize>,
) -> Option<&'a Term> {
    match t {
        PatternTerm::Const(c) => Some(c),
        PatternTerm::Var(v) => b[vars[v]].as_ref(),
    }
}

fn bind(slot: &mut Option<Term>, value: &Term) -> bool {
    match slot {
        Some(existing) => existing == value,
        None => {
            *slot = Some(value.clone());
            true
        }
    }
}

/// Solutions of the basic graph pattern as full bindings.
fn solve(ast: &QueryAst, g: &TripleGraph, plan: &Plan) -> Vec<Binding> {
    let mut bindings: Vec<Binding> = vec![vec![None; plan.vars.len()]];
    for &pi in &plan.order {
        let pat = &ast.patterns[pi];
        let mut next = Vec::new();
        for b in &bindings {
            let s = resolve(&pat.subject, b, &plan.vars);
            let p = resolve(&pat.predicate, b, &plan.vars);
            let o = resolve(&pat.object, b, &plan.vars);
            let (s_iri, p_iri) = match (s, p) {
                (Some(Term::Literal { .. }), _) | (_, Some(Term::Literal { .. })) => continue,
                (s, p) => (s.and_then(Term::as_iri), p.and_then(Term::as_iri)),
            };
            for t in g.matching(s_iri, p_iri, o) {
                let mut nb = b.clone();
                let ok = [
                    (&pat.subject, Term::Iri(t.subject.clone())),
                    (&pat.predicate, Term::Iri(t.predicate.clone())),
                    (&pat.object, t.object.clone()),
                ]
                .iter()
                .all(|(pt, val)| match pt {
                    PatternTerm::Var(v) => bind(&mut nb[plan.vars[v]], val),
                    PatternTerm::Const(_) => true,
                });
                if ok {
                    next.push(nb);
                }
            }
        }
        bindings = next;
        if bindings.is_empty() {
            break;
        }
    }
    bindings
}

fn count_in(c: &Count, group: &[&Binding], vars: &HashMap<String, usize>) -> usize {
    match &c.var {
        None => group.len(),
        Some(v) => group.iter().filter(|b| b[vars[v]].is_some()).count(),
    }
}

fn is_grouped(ast: &QueryAst) -> bool {
    ast.has_aggregates() || !ast.group_by.is_empty() || ast.having.is_some()
}

/// Evaluates a parsed query. Rows are ordered by ORDER BY keys, ties broken
/// by the full row.
pub fn execute(ast: &QueryAst, g: &TripleGraph) -> ResultTable {
    let plan = plan(ast, g);
    let solutions = solve(ast, g, &plan);
    let columns = ast.columns();
    let col_of = |name: &str| columns.iter().position(|c| c == name);
    let mut keyed: Vec<(Vec<Term>, Vec<Term>)> = Vec::new();
    if is_grouped(ast) {
        let mut groups: BTreeMap<Vec<Option<Term>>, Vec<&Binding>> = BTreeMap::new();
        for b in &solutions {
            let key = ast
                .group_by
                .iter()
                .map(|v| b[plan.vars[v]].clone())
                .collect();
            groups.entry(key).or_default().push(b);
        }
        if ast.group_by.is_empty() && groups.is_empty() {
            groups.insert(Vec::new(), Vec::new());
        }
        for (key, members) in &groups {
            if let Some(h) = &ast.having {
                let n = count_in(&h.count, members, &plan.vars) as i64;
                if !h.op.holds(n, h.value) {
                    continue;
                }
            }
            let value_of = |v: &str| {
                let i = ast
                    .group_by
                    .iter()
                    .position(|g| g == v)
                    .expect("validated: selected vars are grouped");
                key[i].clone().expect("BGP solutions bind every variable")
            };
            let row: Vec<Term> = ast
                .select
                .iter()
                .map(|s| match s {
                    SelectItem::Var(v) => value_of(v),
                    SelectItem::Count { count, .. } => {
                        count_term(count_in(count, members, &plan.vars))
                    }
                })
                .collect();
            let sort: Vec<Term> = ast
                .order_by
                .iter()
                .map(|k| match &k.expr {
                    OrderExpr::Var(v) => {
                        row[col_of(v).expect("validated: order vars are columns")].clone()
                    }
                    OrderExpr::Count(c) => count_term(count_in(c, members, &plan.vars)),
                })
                .collect();
            keyed.push((sort, row));
        }
    } else {
        for b in &solutions {
            let row: Vec<Term> = ast
                .select
                .iter()
                .map(|s| {
                    b[plan.vars[s.column()]]
                        .clone()
                        .expect("BGP solutions bind every variable")
                })
                .collect();
            let sort = ast
                .order_by
                .iter()
                .map(|k| match &k.expr {
                    OrderExpr::Var(v) => {
                        row[col_of(v).expect("validated: order vars are columns")].clone()
                    }
                    OrderExpr::Count(_) => {
                        unreachable!("validated: COUNT ordering needs aggregation")
                    }
                })
                .collect();
            keyed.push((sort, row));
        }
    }
    keyed.sort_by(|(ka, ra), (kb, rb)| {
        ast.order_by
            .iter()
            .zip(ka.iter().zip(kb))
            .map(|(k, (a, b))| {
                let o = cmp_terms(a, b);
                if k.descending {
                    o.reverse()
                } else {
                    o
                }
            })
            .find(|o| o.is_ne())
            .unwrap_or_else(|| cmp_rows(ra, rb))
    });
    ResultTable {
        columns,
        rows: keyed.into_iter().map(|(_, r)| r).collect(),
    }
}
