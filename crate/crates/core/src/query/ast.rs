use std::collections::BTreeMap;
use std::fmt;

use crate::kg::vocab::XSD_STRING;
use crate::kg::{Iri, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

/// `COUNT(?v)` or `COUNT(*)` (`var` is `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Count {
    pub var: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectItem {
    Var(String),
    Count { count: Count, alias: String },
}

impl SelectItem {
    /// Output column name.
    pub fn column(&self) -> &str {
        match self {
            SelectItem::Var(v) => v,
            SelectItem::Count { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Having {
    pub count: Count,
    pub op: CmpOp,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderExpr {
    Var(String),
    Count(Count),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderKey {
    pub expr: OrderExpr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryAst {
    /// Declared prefixes; IRIs in patterns are stored expanded.
    pub prefixes: BTreeMap<String, String>,
    pub select: Vec<SelectItem>,
    pub patterns: Vec<TriplePattern>,
    pub group_by: Vec<String>,
    pub having: Option<Having>,
    pub order_by: Vec<OrderKey>,
}

impl QueryAst {
    pub fn has_aggregates(&self) -> bool {
        self.select
            .iter()
            .any(|s| matches!(s, SelectItem::Count { .. }))
    }

    pub fn columns(&self) -> Vec<String> {
        self.select.iter().map(|s| s.column().to_string()).collect()
    }
}

fn write_literal(f: &mut fmt::Formatter<'_>, value: &str, datatype: &Iri) -> fmt::Result {
    f.write_str("\"")?;
    for c in value.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")?;
    if datatype.as_str() != XSD_STRING {
        write!(f, "^^<{datatype}>")?;
    }
    Ok(())
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Const(Term::Iri(i)) => write!(f, "<{i}>"),
            PatternTerm::Const(Term::Literal { value, datatype }) => {
                write_literal(f, value, datatype)
            }
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.var {
            Some(v) => write!(f, "COUNT(?{v})"),
            None => f.write_str("COUNT(*)"),
        }
    }
}

/// Canonical text: one clause per line, IRIs written in full.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, ns) in &self.prefixes {
            writeln!(f, "PREFIX {p}: <{ns}>")?;
        }
        f.write_str("SELECT")?;
        for s in &self.select {
            match s {
                SelectItem::Var(v) => write!(f, " ?{v}")?,
                SelectItem::Count { count, alias } => write!(f, " ({count} AS ?{alias})")?,
            }
        }
        f.write_str(" WHERE {\n")?;
        for t in &self.patterns {
            writeln!(f, "  {} {} {} .", t.subject, t.predicate, t.object)?;
        }
        f.write_str("}")?;
        if !self.group_by.is_empty() {
            f.write_str("\nGROUP BY")?;
            for g in &self.group_by {
                write!(f, " ?{g}")?;
            }
        }
        if let Some(h) = &self.having {
            write!(f, "\nHAVING ({} {} {})", h.count, h.op.symbol(), h.value)?;
        }
        if !self.order_by.is_empty() {
            f.write_str("\nORDER BY")?;
            for k in &self.order_by {
                let inner = match &k.expr {
                    OrderExpr::Var(v) => format!("?{v}"),
                    OrderExpr::Count(c) => c.to_string(),
                };
                write!(f, " {}({inner})", if k.descending { "DESC" } else { "ASC" })?;
            }
        }
        f.write_str("\n")
    }
}
