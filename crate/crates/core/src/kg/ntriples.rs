use std::fmt::Write as _;

use super::model::{Iri, Term, Triple, TripleGraph};
use super::vocab::XSD_STRING;
use crate::error::{Error, Result};

fn escape_literal(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{08}' => out.push_str("\\b"),
            '\u{0C}' => out.push_str("\\f"),
            ' '..='~' => out.push(c),
            c if (c as u32) <= 0xFFFF => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => {
                let _ = write!(out, "\\U{:08X}", c as u32);
            }
        }
    }
}

fn write_iri(i: &Iri, out: &mut String) {
    out.push('<');
    for c in i.as_str().chars() {
        if c.is_ascii() {
            out.push(c);
        } else if (c as u32) <= 0xFFFF {
            let _ = write!(out, "\\u{:04X}", c as u32);
        } else {
            let _ = write!(out, "\\U{:08X}", c as u32);
        }
    }
    out.push('>');
}

/// One N-Triples line without the newline.
pub fn triple_line(t: &Triple) -> String {
    let mut out = String::new();
    write_iri(&t.subject, &mut out);
    out.push(' ');
    write_iri(&t.predicate, &mut out);
    out.push(' ');
    match &t.object {
        Term::Iri(i) => write_iri(i, &mut out),
        Term::Literal { value, datatype } => {
            out.push('"');
            escape_literal(value, &mut out);
            out.push('"');
            if datatype.as_str() != XSD_STRING {
                out.push_str("^^");
                write_iri(datatype, &mut out);
            }
        }
    }
    out.push_str(" .");
    out
}

/// ASCII-only N-Triples, lines sorted.
pub fn serialize_ntriples(g: &TripleGraph) -> String {
    let mut lines: Vec<String> = g.iter().map(triple_line).collect();
    lines.sort();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::NTriples {
            line: self.line,
            message: format!("{} (column {})", message.into(), self.pos + 1),
        }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start_matches([' ', '\t']).len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn next_char(&mut self) -> Option<char> {
        let c = self.rest().chars().next()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn hex(&mut self, n: usize) -> Result<char> {
        let r = self.rest();
        let digits = r
            .get(..n)
            .filter(|d| d.chars().all(|c| c.is_ascii_hexdigit()));
        let Some(digits) = digits else {
            return Err(self.err("bad \\u escape"));
        };
        self.pos += n;
        u32::from_str_radix(digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.err("escape is not a scalar value"))
    }

    fn iri(&mut self) -> Result<Iri> {
        if !self.eat('<') {
            return Err(self.err(if self.rest().starts_with("_:") {
                "blank nodes are not supported"
            } else {
                "expected `<`"
            }));
        }
        let mut v = String::new();
        loop {
            match self.next_char() {
                None => return Err(self.err("unterminated IRI")),
                Some('>') => break,
                Some('\\') => match self.next_char() {
                    Some('u') => v.push(self.hex(4)?),
                    Some('U') => v.push(self.hex(8)?),
                    _ => return Err(self.err("bad escape in IRI")),
                },
                Some(c) => v.push(c),
            }
        }
        Iri::new(v).map_err(|e| self.err(e.to_string()))
    }

    fn literal(&mut self) -> Result<Term> {
        let mut v = String::new();
        loop {
            match self.next_char() {
                None => return Err(self.err("unterminated literal")),
                Some('"') => break,
                Some('\\') => match self.next_char() {
                    Some('t') => v.push('\t'),
                    Some('b') => v.push('\u{08}'),
                    Some('n') => v.push('\n'),
                    Some('r') => v.push('\r'),
                    Some('f') => v.push('\u{0C}'),
                    Some('"') => v.push('"'),
                    Some('\'') => v.push('\''),
                    Some('\\') => v.push('\\'),
                    Some('u') => v.push(self.hex(4)?),
                    Some('U') => v.push(self.hex(8)?),
                    _ => return Err(self.err("bad escape in literal")),
                },
                Some(c) => v.push(c),
            }
        }
        if self.rest().starts_with("^^") {
            self.pos += 2;
            let datatype = self.iri()?;
            Ok(Term::Literal { value: v, datatype })
        } else if self.rest().starts_with('@') {
            Err(self.err("language-tagged literals are not supported"))
        } else {
            Ok(Term::string(v))
        }
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>> {
    let mut c = Cursor {
        s: line,
        pos: 0,
        line: line_no,
    };
    c.skip_ws();
    if c.rest().is_empty() || c.rest().starts_with('#') {
        return Ok(None);
    }
    let subject = c.iri()?;
    c.skip_ws();
    let predicate = c.iri()?;
    c.skip_ws();
    let object = if c.eat('"') {
        c.literal()?
    } else {
        Term::Iri(c.iri()?)
    };
    c.skip_ws();
    if !c.eat('.') {
        return Err(c.err("expected `.`"));
    }
    c.skip_ws();
    if !(c.rest().is_empty() || c.rest().starts_with('#')) {
        return Err(c.err("trailing content"));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}

pub fn parse_ntriples(text: &str) -> Result<TripleGraph> {
    let mut g = TripleGraph::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(t) = parse_line(line.trim_end_matches('\r'), i + 1)? {
            g.insert(t);
        }
    }
    Ok(g)
}
