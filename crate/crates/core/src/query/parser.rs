use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use crate::error::{Error, Result};
use crate::kg::vocab::{RDF, RDF_TYPE, XSD_INTEGER};
use crate::kg::{Iri, Term};

/// Prefixes usable without a declaration.
const IMPLICIT_PREFIXES: [(&str, &str); 1] = [("rdf", RDF)];

const UNSUPPORTED: [&str; 18] = [
    "OPTIONAL",
    "FILTER",
    "UNION",
    "MINUS",
    "BIND",
    "VALUES",
    "SERVICE",
    "GRAPH",
    "LIMIT",
    "OFFSET",
    "DISTINCT",
    "REDUCED",
    "BASE",
    "CONSTRUCT",
    "ASK",
    "DESCRIBE",
    "EXISTS",
    "NOT",
];
const UNSUPPORTED_AGGREGATES: [&str; 6] = ["SUM", "AVG", "MIN", "MAX", "SAMPLE", "GROUP_CONCAT"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Word(String),
    Str(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::QuerySyntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            })
        };
        if c == '?' || c == '$' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            if j == i + 1 {
                return Err(syntax(l0, c0, "empty variable name"));
            }
            push(&mut out, Tok::Var(chars[i + 1..j].iter().collect()));
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if c == '<' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '>' && !chars[j].is_whitespace() {
                j += 1;
            }
            if j < chars.len() && chars[j] == '>' && j > i + 1 && chars[i + 1] != '=' {
                push(&mut out, Tok::Iri(chars[i + 1..j].iter().collect()));
                {
                    let n = j + 1 - i;
                    advance(&mut i, &mut line, &mut col, n);
                }
                continue;
            }
        }
        if c == '"' || c == '\'' {
            let mut j = i + 1;
            let mut v = String::new();
            loop {
                match chars.get(j) {
                    None | Some('\n') => return Err(syntax(l0, c0, "unterminated string")),
                    Some(&q) if q == c => break,
                    Some('\\') => {
                        let e = match chars.get(j + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some('"') => '"',
                            Some('\'') => '\'',
                            Some('\\') => '\\',
                            _ => return Err(syntax(line, col + (j - i), "bad escape")),
                        };
                        v.push(e);
                        j += 2;
                    }
                    Some(&ch) => {
                        v.push(ch);
                        j += 1;
                    }
                }
            }
            push(&mut out, Tok::Str(v));
            {
                let n = j + 1 - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            let v = s
                .parse()
                .map_err(|_| syntax(l0, c0, "integer out of range"))?;
            push(&mut out, Tok::Int(v));
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == ':' {
            let mut j = i;
            while j < chars.len() && (is_name_char(chars[j]) || chars[j] == ':') {
                j += 1;
            }
            while j > i + 1 && chars[j - 1] == '.' {
                j -= 1;
            }
            let s: String = chars[i..j].iter().collect();
            let tok = match s.split_once(':') {
                Some((p, l)) => Tok::PName(p.to_string(), l.to_string()),
                None => Tok::Word(s),
            };
            push(&mut out, tok);
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let p: &'static str = match two.as_str() {
            "<=" => "<=",
            ">=" => ">=",
            "!=" => "!=",
            "^^" => "^^",
            "&&" => "&&",
            "||" => "||",
            _ => match c {
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                '.' => ".",
                '*' => "*",
                ',' => ",",
                ';' => ";",
                '<' => "<",
                '>' => ">",
                '=' => "=",
                '!' => "!",
                '[' => "[",
                ']' => "]",
                _ => return Err(syntax(l0, c0, format!("unexpected character `{c}`"))),
            },
        };
        push(&mut out, Tok::Punct(p));
        advance(&mut i, &mut line, &mut col, p.len());
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        if let Tok::Word(w) = &t.tok {
            let up = w.to_ascii_uppercase();
            if UNSUPPORTED.contains(&up.as_str()) || UNSUPPORTED_AGGREGATES.contains(&up.as_str()) {
                return Error::UnsupportedFeature {
                    feature: up,
                    line: t.line,
                    column: t.column,
                };
            }
        }
        if let Tok::Punct(p @ ("{" | ";" | "," | "[" | "&&" | "||" | "!")) = &t.tok {
            return Error::UnsupportedFeature {
                feature: (*p).to_string(),
                line: t.line,
                column: t.column,
            };
        }
        syntax(t.line, t.column, message)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(x) if x.eq_ignore_ascii_case(w))
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{w}`")))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(x) if *x == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{p}`")))
        }
    }

    fn var(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Var(v) => {
                let v = v.clone();
                self.bump();
                Ok(v)
            }
            _ => Err(self.error_here("expected a variable")),
        }
    }

    fn resolve(&self, prefix: &str, local: &str, line: usize, column: usize) -> Result<Iri> {
        let ns = self
            .prefixes
            .get(prefix)
            .map(String::as_str)
            .or_else(|| {
                IMPLICIT_PREFIXES
                    .iter()
                    .find(|(p, _)| *p == prefix)
                    .map(|(_, n)| *n)
            })
            .ok_or_else(|| Error::UnboundPrefix {
                prefix: prefix.to_string(),
                line,
                column,
            })?;
        Iri::new(format!("{ns}{local}")).map_err(|e| syntax(line, column, e.to_string()))
    }

    fn prologue(&mut self) -> Result<()> {
        while self.eat_word("PREFIX") {
            let t = self.bump();
            let Tok::PName(p, l) = t.tok else {
                return Err(syntax(t.line, t.column, "expected `prefix:`"));
            };
            if !l.is_empty() {
                return Err(syntax(
                    t.line,
                    t.column,
                    "prefix declaration must end with `:`",
                ));
            }
            let t = self.bump();
            let Tok::Iri(ns) = t.tok else {
                return Err(syntax(t.line, t.column, "expected `<namespace>`"));
            };
            Iri::new(ns.clone()).map_err(|e| syntax(t.line, t.column, e.to_string()))?;
            self.prefixes.insert(p, ns);
        }
        Ok(())
    }

    fn count(&mut self) -> Result<Count> {
        self.expect_word("COUNT")?;
        self.expect_punct("(")?;
        let var = if self.eat_punct("*") {
            None
        } else {
            Some(self.var()?)
        };
        self.expect_punct(")")?;
        Ok(Count { var })
    }

    fn select(&mut self) -> Result<Vec<SelectItem>> {
        self.expect_word("SELECT")?;
        let mut items = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Var(_) => items.push(SelectItem::Var(self.var()?)),
                Tok::Punct("(") => {
                    self.bump();
                    let count = self.count()?;
                    self.expect_word("AS")?;
                    let alias = self.var()?;
                    self.expect_punct(")")?;
                    items.push(SelectItem::Count { count, alias });
                }
                Tok::Punct("*") => {
                    let t = self.peek();
                    return Err(Error::UnsupportedFeature {
                        feature: "SELECT *".into(),
                        line: t.line,
                        column: t.column,
                    });
                }
                _ => break,
            }
        }
        if items.is_empty() {
            return Err(self.error_here("expected a variable or `(COUNT(...) AS ?alias)`"));
        }
        Ok(items)
    }

    fn term(&mut self, predicate: bool) -> Result<PatternTerm> {
        let t = self.peek().clone();
        let term = match t.tok {
            Tok::Var(v) => PatternTerm::Var(v),
            Tok::Iri(s) => PatternTerm::Const(Term::Iri(
                Iri::new(s).map_err(|e| syntax(t.line, t.column, e.to_string()))?,
            )),
            Tok::PName(p, l) => {
                PatternTerm::Const(Term::Iri(self.resolve(&p, &l, t.line, t.column)?))
            }
            Tok::Word(w) if predicate && w == "a" => {
                PatternTerm::Const(Term::Iri(Iri::new(RDF_TYPE)?))
            }
            Tok::Str(s) if !predicate => {
                self.bump();
                let term = if self.eat_punct("^^") {
                    let d = self.peek().clone();
                    let datatype = match d.tok {
                        Tok::Iri(s) => {
                            Iri::new(s).map_err(|e| syntax(d.line, d.column, e.to_string()))?
                        }
                        Tok::PName(p, l) => self.resolve(&p, &l, d.line, d.column)?,
                        _ => return Err(self.error_here("expected a datatype IRI")),
                    };
                    self.bump();
                    Term::Literal { value: s, datatype }
                } else {
                    Term::string(s)
                };
                return Ok(PatternTerm::Const(term));
            }
            Tok::Int(n) if !predicate => {
                PatternTerm::Const(Term::typed(n.to_string(), XSD_INTEGER))
            }
            _ => return Err(self.error_here("expected a variable, IRI or literal")),
        };
        self.bump();
        Ok(term)
    }

    fn where_clause(&mut self) -> Result<Vec<TriplePattern>> {
        self.eat_word("WHERE");
        self.expect_punct("{")?;
        let mut patterns = Vec::new();
        while !self.is_punct("}") {
            let subject = self.term(false)?;
            if matches!(subject, PatternTerm::Const(Term::Literal { .. })) {
                let t = &self.toks[self.pos - 1];
                return Err(syntax(t.line, t.column, "literal in subject position"));
            }
            let predicate = self.term(true)?;
            let object = self.term(false)?;
            patterns.push(TriplePattern {
                subject,
                predicate,
                object,
            });
            if !self.eat_punct(".") && !self.is_punct("}") {
                return Err(self.error_here("expected `.` or `}`"));
            }
        }
        self.expect_punct("}")?;
        Ok(patterns)
    }

    fn cmp_op(&mut self) -> Result<CmpOp> {
        let op = match &self.peek().tok {
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            _ => return Err(self.error_here("expected a comparison operator")),
        };
        self.bump();
        Ok(op)
    }

    fn having(&mut self) -> Result<Having> {
        let paren = self.eat_punct("(");
        let count = self.count()?;
        let op = self.cmp_op()?;
        let value = match self.peek().tok {
            Tok::Int(n) => n,
            _ => return Err(self.error_here("HAVING compares a count with an integer")),
        };
        self.bump();
        if paren {
            self.expect_punct(")")?;
        }
        Ok(Having { count, op, value })
    }

    fn order_expr(&mut self) -> Result<OrderExpr> {
        if matches!(self.peek().tok, Tok::Var(_)) {
            Ok(OrderExpr::Var(self.var()?))
        } else if self.is_word("COUNT") {
            Ok(OrderExpr::Count(self.count()?))
        } else {
            Err(self.error_here("expected a variable or COUNT(...)"))
        }
    }

    fn order_by(&mut self) -> Result<Vec<OrderKey>> {
        let mut keys = Vec::new();
        loop {
            let descending = if self.eat_word("DESC") {
                Some(true)
            } else if self.eat_word("ASC") {
                Some(false)
            } else {
                None
            };
            let key = match descending {
                Some(descending) => {
                    self.expect_punct("(")?;
                    let expr = self.order_expr()?;
                    self.expect_punct(")")?;
                    OrderKey { expr, descending }
                }
                None if matches!(self.peek().tok, Tok::Var(_)) || self.is_word("COUNT") => {
                    OrderKey {
                        expr: self.order_expr()?,
                        descending: false,
                    }
                }
                None => break,
            };
            keys.push(key);
        }
        if keys.is_empty() {
            return Err(self.error_here("expected an ORDER BY key"));
        }
        Ok(keys)
    }

    fn query(&mut self) -> Result<QueryAst> {
        self.prologue()?;
        let select = self.select()?;
        let patterns = self.where_clause()?;
        let mut ast = QueryAst {
            prefixes: std::mem::take(&mut self.prefixes),
            select,
            patterns,
            ..QueryAst::default()
        };
        self.prefixes = ast.prefixes.clone();
        if self.eat_word("GROUP") {
            self.expect_word("BY")?;
            while matches!(self.peek().tok, Tok::Var(_)) {
                ast.group_by.push(self.var()?);
            }
            if ast.group_by.is_empty() {
                return Err(self.error_here("expected a GROUP BY variable"));
            }
        }
        if self.eat_word("HAVING") {
            ast.having = Some(self.having()?);
        }
        if self.eat_word("ORDER") {
            self.expect_word("BY")?;
            ast.order_by = self.order_by()?;
        }
        if self.peek().tok != Tok::Eof {
            return Err(self.error_here("unexpected input after query"));
        }
        Ok(ast)
    }
}

fn validate(ast: &QueryAst) -> Result<()> {
    let invalid = |m: String| Err(Error::InvalidQuery(m));
    let pattern_vars: BTreeSet<&str> = ast
        .patterns
        .iter()
        .flat_map(|p| p.terms())
        .filter_map(PatternTerm::var)
        .collect();
    let check_count = |c: &Count| match &c.var {
        Some(v) if !pattern_vars.contains(v.as_str()) => {
            invalid(format!("?{v} is counted but not in the WHERE clause"))
        }
        _ => Ok(()),
    };
    let mut columns = BTreeSet::new();
    for s in &ast.select {
        if !columns.insert(s.column()) {
            return invalid(format!("duplicate column ?{}", s.column()));
        }
        match s {
            SelectItem::Var(v) if !pattern_vars.contains(v.as_str()) => {
                return invalid(format!("?{v} is selected but not in the WHERE clause"))
            }
            SelectItem::Count { count, alias } => {
                check_count(count)?;
                if pattern_vars.contains(alias.as_str()) {
                    return invalid(format!("alias ?{alias} is already a pattern variable"));
                }
            }
            SelectItem::Var(_) => {}
        }
    }
    for g in &ast.group_by {
        if !pattern_vars.contains(g.as_str()) {
            return invalid(format!("?{g} is grouped but not in the WHERE clause"));
        }
    }
    let grouped = ast.has_aggregates() || !ast.group_by.is_empty() || ast.having.is_some();
    if grouped {
        for s in &ast.select {
            if let SelectItem::Var(v) = s {
                if !ast.group_by.contains(v) {
                    return invalid(format!("?{v} is selected but not grouped"));
                }
            }
        }
    }
    if let Some(h) = &ast.having {
        check_count(&h.count)?;
    }
    for k in &ast.order_by {
        match &k.expr {
            OrderExpr::Var(v) if !columns.contains(v.as_str()) => {
                return invalid(format!("ORDER BY ?{v} is not a selected column"))
            }
            OrderExpr::Count(c) => {
                if !grouped {
                    return invalid("ORDER BY COUNT(...) needs an aggregate query".into());
                }
                check_count(c)?;
            }
            OrderExpr::Var(_) => {}
        }
    }
    Ok(())
}

/// Parses the supported SPARQL subset.
pub fn parse_query(text: &str) -> Result<QueryAst> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        prefixes: BTreeMap::new(),
    };
    let ast = p.query()?;
    validate(&ast)?;
    Ok(ast)
}
