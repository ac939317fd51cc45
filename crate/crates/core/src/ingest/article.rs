//! Article parsing (JATS XML and plain text with headings) and M&M section lookup.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use serde::{Deserialize, Serialize};

use super::stopwords::StopWords;
use super::text::{split_sentences_with, Sentence};
use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuthorRef {
    pub name: String,
    pub affiliation: Option<String>,
    pub orcid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub text: String,
    /// Byte offset of `text` in [`Document::text`].
    pub char_offset: usize,
    pub is_mm: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub year: Option<i32>,
    /// Full publication date (`YYYY-MM-DD`) when the source has one.
    pub date: Option<String>,
    pub doi: Option<String>,
    pub publisher: Option<String>,
    /// Identifier of the same article in an external scholarly graph.
    pub same_as: Option<String>,
    pub authors: Vec<AuthorRef>,
    pub sections: Vec<Section>,
    pub source_path: String,
    /// Section texts joined by blank lines.
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArticleFormat {
    JatsXml,
    PlainText,
}

impl ArticleFormat {
    /// `.xml`/`.nxml` are JATS, everything else plain text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("xml") | Some("nxml") => ArticleFormat::JatsXml,
            _ => ArticleFormat::PlainText,
        }
    }
}

/// Normalized heading variants that mark a Methods & Materials section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadingSet {
    headings: HashSet<String>,
}

const DEFAULT_MM_HEADINGS: &[&str] = &[
    "methods",
    "materials and methods",
    "methods and materials",
    "materials & methods",
    "study design and methods",
];

impl Default for HeadingSet {
    fn default() -> Self {
        Self::new(DEFAULT_MM_HEADINGS)
    }
}

impl HeadingSet {
    pub fn new<S: AsRef<str>>(headings: &[S]) -> Self {
        HeadingSet {
            headings: headings
                .iter()
                .map(|h| normalize_heading(h.as_ref()))
                .filter(|h| !h.is_empty())
                .collect(),
        }
    }

    /// One heading per line, `#` comments allowed.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        Ok(Self::new(&lines))
    }

    pub fn matches(&self, heading: &str) -> bool {
        self.headings.contains(&normalize_heading(heading))
    }
}

/// Lowercases, drops leading section numbering and trailing punctuation,
/// collapses whitespace.
pub fn normalize_heading(heading: &str) -> String {
    let lower = heading.trim().to_lowercase();
    let stripped =
        lower.trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c.is_whitespace());
    let words: Vec<&str> = stripped.split_whitespace().collect();
    words
        .join(" ")
        .trim_end_matches([':', '.', ';'])
        .trim()
        .to_string()
}

/// First section whose heading is in the M&M heading set.
pub fn find_mm_section<'a>(doc: &'a Document, headings: &HeadingSet) -> Option<&'a Section> {
    doc.sections.iter().find(|s| headings.matches(&s.heading))
}

impl Document {
    /// Sets `is_mm` on the first matching section and clears it elsewhere.
    pub fn mark_mm(&mut self, headings: &HeadingSet) -> Option<usize> {
        let idx = self
            .sections
            .iter()
            .position(|s| headings.matches(&s.heading));
        for (i, s) in self.sections.iter_mut().enumerate() {
            s.is_mm = Some(i) == idx && !s.text.trim().is_empty();
        }
        idx.filter(|&i| self.sections[i].is_mm)
    }

    pub fn mm_section(&self) -> Option<&Section> {
        self.sections.iter().find(|s| s.is_mm)
    }

    /// Sentences of the M&M section; offsets are relative to [`Document::text`].
    pub fn mm_sentences(&self, stopwords: &StopWords) -> Vec<Sentence> {
        let Some(section) = self.mm_section() else {
            return Vec::new();
        };
        split_sentences_with(&section.text, stopwords)
            .into_iter()
            .map(|mut s| {
                s.doc_id = self.id.clone();
                s.offset += section.char_offset;
                s
            })
            .collect()
    }
}

/// Parses an article. `source_path` provides the fallback id (file stem).
pub fn parse_article(bytes: &[u8], format: ArticleFormat, source_path: &str) -> Result<Document> {
    let text = String::from_utf8(bytes.to_vec())?;
    let raw = match format {
        ArticleFormat::JatsXml => parse_jats(&text)?,
        ArticleFormat::PlainText => parse_plain(&text),
    };
    raw.into_document(source_path)
}

pub fn load_article(path: &Path) -> Result<Document> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_article(
        &bytes,
        ArticleFormat::from_path(path),
        &path.to_string_lossy(),
    )
}

/// Loads the documents listed in a tab-separated manifest
/// (`path [\t doi [\t year]]`, paths relative to the manifest).
pub fn load_manifest(manifest: &Path) -> Result<Vec<Document>> {
    let text = read_to_string(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut docs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let rel = cols.next().unwrap_or_default().trim();
        let mut doc = load_article(&base.join(rel))?;
        if let Some(doi) = cols.next().map(str::trim).filter(|d| !d.is_empty()) {
            doc.doi = Some(doi.to_string());
            doc.id = doi.to_string();
        }
        if let Some(year) = cols.next().map(str::trim).filter(|y| !y.is_empty()) {
            let year = year.parse().map_err(|_| {
                Error::format(
                    manifest.display().to_string(),
                    n + 1,
                    format!("bad year `{year}`"),
                )
            })?;
            doc.year = Some(check_year(year).ok_or_else(|| {
                Error::format(
                    manifest.display().to_string(),
                    n + 1,
                    format!("year {year} out of range"),
                )
            })?);
        }
        docs.push(doc);
    }
    ensure_unique(&docs)?;
    Ok(docs)
}

/// Loads every `.xml`, `.nxml` and `.txt` file of a directory, sorted by name.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<Document>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("xml") | Some("nxml") | Some("txt")
            )
        })
        .collect();
    paths.sort();
    let docs = paths
        .iter()
        .map(|p| load_article(p))
        .collect::<Result<Vec<_>>>()?;
    ensure_unique(&docs)?;
    Ok(docs)
}

fn ensure_unique(docs: &[Document]) -> Result<()> {
    let mut seen = HashSet::new();
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::Config(format!("duplicate document id `{}`", d.id)));
        }
    }
    Ok(())
}

fn check_year(year: i32) -> Option<i32> {
    (1900..=2100).contains(&year).then_some(year)
}

#[derive(Default)]
struct RawArticle {
    id: Option<String>,
    title: String,
    year: Option<i32>,
    date: Option<String>,
    doi: Option<String>,
    publisher: Option<String>,
    same_as: Option<String>,
    authors: Vec<AuthorRef>,
    sections: Vec<(String, String)>,
}

impl RawArticle {
    fn into_document(self, source_path: &str) -> Result<Document> {
        let sections: Vec<(String, String)> = self
            .sections
            .into_iter()
            .map(|(h, t)| (h, t.trim().to_string()))
            .filter(|(_, t)| !t.is_empty())
            .collect();
        if sections.is_empty() {
            return Err(Error::NoContent(format!("{source_path} has no body text")));
        }
        let mut text = String::new();
        let mut out = Vec::with_capacity(sections.len());
        for (heading, body) in sections {
            if !text.is_empty() {
                text.push_str("\n\n");
            }
            let char_offset = text.len();
            text.push_str(&body);
            out.push(Section {
                heading,
                text: body,
                char_offset,
                is_mm: false,
            });
        }
        let stem = Path::new(source_path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let id = self.id.or_else(|| self.doi.clone()).unwrap_or(stem);
        if id.is_empty() {
            return Err(Error::MissingKey(format!(
                "document id for `{source_path}`"
            )));
        }
        Ok(Document {
            id,
            title: self.title,
            year: self.year.and_then(check_year),
            date: self.date,
            doi: self.doi,
            publisher: self.publisher,
            same_as: self.same_as,
            authors: self.authors,
            sections: out,
            source_path: source_path.to_string(),
            text,
        })
    }
}

const SYNTHETIC_SECTION: &str = "body";

fn parse_plain(text: &str) -> RawArticle {
    let mut raw = RawArticle::default();
    let mut rest = text;

    // optional `Key: value` front matter terminated by a blank line
    let first = text.lines().next().unwrap_or_default();
    if front_matter_key(first).is_some() {
        let mut consumed = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                consumed += line.len();
                break;
            }
            let Some((key, value)) = front_matter_key(trimmed) else {
                break;
            };
            consumed += line.len();
            let value = value.trim().to_string();
            match key.as_str() {
                "id" => raw.id = Some(value),
                "title" => raw.title = value,
                "year" => raw.year = value.parse().ok(),
                "date" => {
                    if raw.year.is_none() {
                        raw.year = value.get(..4).and_then(|y| y.parse().ok());
                    }
                    raw.date = Some(value);
                }
                "doi" => raw.doi = Some(value),
                "publisher" => raw.publisher = Some(value),
                "sameas" => raw.same_as = Some(value),
                "authors" => {
                    raw.authors = value
                        .split(';')
                        .map(str::trim)
                        .filter(|a| !a.is_empty())
                        .map(parse_author_field)
                        .collect()
                }
                _ => {}
            }
        }
        rest = &text[consumed..];
    }

    // headings are standalone single-line paragraphs
    let mut current: Option<(String, usize)> = None;
    let mut pending_start = 0usize;
    let mut offset = 0usize;
    let mut prev_blank = true;
    let lines: Vec<&str> = rest.split_inclusive('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        let next_blank = lines.get(i + 1).is_none_or(|l| l.trim().is_empty());
        let trimmed = line.trim();
        if prev_blank && next_blank && is_heading_line(trimmed) {
            let body = &rest[pending_start..offset];
            match current.take() {
                Some((h, _)) => raw.sections.push((h, body.to_string())),
                None if !body.trim().is_empty() => raw
                    .sections
                    .push((SYNTHETIC_SECTION.to_string(), body.to_string())),
                None => {}
            }
            current = Some((trimmed.trim_start_matches('#').trim().to_string(), offset));
            pending_start = offset + line.len();
        }
        prev_blank = trimmed.is_empty();
        offset += line.len();
    }
    let body = &rest[pending_start..];
    let heading = current.map_or(SYNTHETIC_SECTION.to_string(), |(h, _)| h);
    raw.sections.push((heading, body.to_string()));
    raw
}

fn front_matter_key(line: &str) -> Option<(String, &str)> {
    let (key, value) = line.split_once(':')?;
    let key = key.trim().to_lowercase();
    matches!(
        key.as_str(),
        "id" | "title" | "year" | "date" | "doi" | "publisher" | "sameas" | "authors"
    )
    .then_some((key, value))
}

/// `Name [| affiliation [| orcid]]`
fn parse_author_field(field: &str) -> AuthorRef {
    let mut parts = field.split('|').map(str::trim);
    let name = parts.next().unwrap_or_default().to_string();
    let affiliation = parts.next().filter(|s| !s.is_empty()).map(str::to_string);
    let orcid = parts.next().filter(|s| !s.is_empty()).map(str::to_string);
    AuthorRef {
        name,
        affiliation,
        orcid,
    }
}

fn is_heading_line(line: &str) -> bool {
    if line.is_empty() {
        return false;
    }
    if line.starts_with('#') {
        return true;
    }
    let words = line.split_whitespace().count();
    let first = line.chars().next().unwrap_or(' ');
    line.len() <= 80
        && words <= 10
        && (first.is_uppercase() || first.is_ascii_digit())
        && !line.ends_with(['.', '?', '!', ',', ';', ':'])
}

fn xml_error(reader: &Reader<&[u8]>, err: impl std::fmt::Display) -> Error {
    Error::Xml {
        offset: reader.error_position(),
        message: err.to_string(),
    }
}

fn attr(e: &BytesStart, name: &str) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name)
        .and_then(|a| {
            a.normalized_value(XmlVersion::Implicit1_0)
                .ok()
                .map(|v| v.into_owned())
        })
}

fn resolve_entity(name: &str) -> Option<char> {
    Some(match name {
        "lt" => '<',
        "gt" => '>',
        "amp" => '&',
        "apos" => '\'',
        "quot" => '"',
        "nbsp" => '\u{a0}',
        _ => return None,
    })
}

#[derive(Default)]
struct JatsAuthor {
    given: String,
    surname: String,
    orcid: Option<String>,
    aff_ids: Vec<String>,
    inline_aff: Option<String>,
}

/// Streaming JATS reader. Captures article metadata, and the text of the
/// paragraphs of each top-level body `<sec>`.
fn parse_jats(text: &str) -> Result<RawArticle> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let mut raw = RawArticle::default();
    let mut stack: Vec<String> = Vec::new();
    let mut capture: Option<String> = None;
    let mut capture_depth = 0usize;
    let mut capture_kind = "";

    let mut authors: Vec<JatsAuthor> = Vec::new();
    let mut in_author = false;
    let mut affs: HashMap<String, String> = HashMap::new();
    let mut aff_id: Option<String> = None;
    let mut date_parts: (Option<String>, Option<String>, Option<String>) = (None, None, None);
    let mut date_done = false;
    let mut doi_attr = false;
    let mut orcid_attr = false;

    // body state
    let mut body_depth: Option<usize> = None;
    let mut sec_depth: Option<usize> = None;
    let mut sec_title: Option<String> = None;
    let mut sec_paras: Vec<String> = Vec::new();
    let mut loose_paras: Vec<String> = Vec::new();
    let mut skip_depth: Option<usize> = None;
    let mut saw_body = false;

    loop {
        let event = reader.read_event().map_err(|e| xml_error(&reader, e))?;
        match event {
            Event::Start(e) => {
                let name = e.local_name().as_ref().to_string();
                let depth = stack.len();
                let parent = stack.last().map(String::as_str).unwrap_or("");
                match name.as_str() {
                    "body" if body_depth.is_none() => {
                        body_depth = Some(depth);
                        saw_body = true;
                    }
                    "sec" if body_depth == Some(depth - 1) && sec_depth.is_none() => {
                        sec_depth = Some(depth);
                        sec_title = None;
                        sec_paras.clear();
                    }
                    "fig" | "table-wrap" | "caption" | "disp-formula"
                        if body_depth.is_some() && skip_depth.is_none() =>
                    {
                        skip_depth = Some(depth);
                    }
                    "contrib" => {
                        let is_author = attr(&e, "contrib-type").is_none_or(|t| t == "author");
                        in_author = is_author;
                        if is_author {
                            authors.push(JatsAuthor::default());
                        }
                    }
                    "aff" => aff_id = attr(&e, "id"),
                    "article-id" => doi_attr = attr(&e, "pub-id-type").as_deref() == Some("doi"),
                    "contrib-id" => {
                        orcid_attr = attr(&e, "contrib-id-type").as_deref() == Some("orcid")
                    }
                    "pub-date" => {}
                    _ => {}
                }
                if capture.is_none() && skip_depth.is_none() {
                    let in_meta = stack.iter().any(|s| s == "article-meta");
                    let kind = match name.as_str() {
                        "article-title"
                            if in_meta && raw.title.is_empty() && parent == "title-group" =>
                        {
                            "title"
                        }
                        "article-id" if doi_attr && raw.doi.is_none() => "doi",
                        "publisher-name" if raw.publisher.is_none() => "publisher",
                        "year" | "month" | "day" if parent == "pub-date" && !date_done => {
                            match name.as_str() {
                                "year" => "year",
                                "month" => "month",
                                _ => "day",
                            }
                        }
                        "surname" if in_author => "surname",
                        "given-names" if in_author => "given",
                        "contrib-id" if in_author && orcid_attr => "orcid",
                        "aff" if in_author => "inline-aff",
                        "aff" => "aff",
                        "title" if sec_depth == Some(depth - 1) && sec_title.is_none() => {
                            "sec-title"
                        }
                        "p" if body_depth.is_some() => "p",
                        _ => "",
                    };
                    if !kind.is_empty() {
                        capture = Some(String::new());
                        capture_depth = depth;
                        capture_kind = kind;
                    }
                }
                if name == "xref" && in_author && attr(&e, "ref-type").as_deref() == Some("aff") {
                    if let (Some(a), Some(rid)) = (authors.last_mut(), attr(&e, "rid")) {
                        a.aff_ids.extend(rid.split_whitespace().map(str::to_string));
                    }
                }
                if name == "label" && capture_kind == "aff" {
                    // affiliation labels ("1", "a") are not part of the name
                    skip_depth.get_or_insert(depth);
                }
                stack.push(name);
            }
            Event::End(_) => {
                let name = stack.pop().unwrap_or_default();
                let depth = stack.len();
                if skip_depth == Some(depth) {
                    skip_depth = None;
                }
                if capture.is_some() && capture_depth == depth {
                    let value = normalize_ws(&capture.take().unwrap_or_default());
                    match capture_kind {
                        "title" => raw.title = value,
                        "doi" => raw.doi = Some(value),
                        "publisher" => raw.publisher = Some(value),
                        "year" => date_parts.0 = Some(value),
                        "month" => date_parts.1 = Some(value),
                        "day" => date_parts.2 = Some(value),
                        "surname" => {
                            if let Some(a) = authors.last_mut() {
                                a.surname = value
                            }
                        }
                        "given" => {
                            if let Some(a) = authors.last_mut() {
                                a.given = value
                            }
                        }
                        "orcid" => {
                            if let Some(a) = authors.last_mut() {
                                a.orcid = Some(value)
                            }
                        }
                        "inline-aff" => {
                            if let Some(a) = authors.last_mut() {
                                a.inline_aff = Some(value)
                            }
                        }
                        "aff" => {
                            if let Some(id) = aff_id.take() {
                                affs.insert(id, value);
                            }
                        }
                        "sec-title" => sec_title = Some(value),
                        "p" if !value.is_empty() => {
                            if sec_depth.is_some() {
                                sec_paras.push(value);
                            } else {
                                loose_paras.push(value);
                            }
                        }
                        _ => {}
                    }
                    capture_kind = "";
                }
                match name.as_str() {
                    "pub-date" if date_parts.0.is_some() => date_done = true,
                    "contrib" => in_author = false,
                    "sec" if sec_depth == Some(depth) => {
                        if !loose_paras.is_empty() {
                            raw.sections
                                .push((SYNTHETIC_SECTION.to_string(), loose_paras.join("\n\n")));
                            loose_paras.clear();
                        }
                        raw.sections
                            .push((sec_title.take().unwrap_or_default(), sec_paras.join("\n\n")));
                        sec_paras.clear();
                        sec_depth = None;
                    }
                    "body" if body_depth == Some(depth) => {
                        if !loose_paras.is_empty() {
                            raw.sections
                                .push((SYNTHETIC_SECTION.to_string(), loose_paras.join("\n\n")));
                            loose_paras.clear();
                        }
                        body_depth = None;
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let (Some(buf), None) = (capture.as_mut(), skip_depth) {
                    buf.push_str(&t.xml10_content());
                }
            }
            Event::CData(t) => {
                if let (Some(buf), None) = (capture.as_mut(), skip_depth) {
                    buf.push_str(&t);
                }
            }
            Event::GeneralRef(r) => {
                if let (Some(buf), None) = (capture.as_mut(), skip_depth) {
                    let name = r.xml10_content();
                    match r.resolve_char_ref().map_err(|e| xml_error(&reader, e))? {
                        Some(c) => buf.push(c),
                        None => match resolve_entity(&name) {
                            Some(c) => buf.push(c),
                            None => {
                                buf.push('&');
                                buf.push_str(&name);
                                buf.push(';');
                            }
                        },
                    }
                }
            }
            Event::Empty(e) => {
                let name = e.local_name();
                if name.as_ref() == "xref"
                    && in_author
                    && attr(&e, "ref-type").as_deref() == Some("aff")
                {
                    if let (Some(a), Some(rid)) = (authors.last_mut(), attr(&e, "rid")) {
                        a.aff_ids.extend(rid.split_whitespace().map(str::to_string));
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(Error::Xml {
            offset: reader.buffer_position(),
            message: format!("unexpected end of input inside <{}>", stack.last().unwrap()),
        });
    }
    if !saw_body {
        return Err(Error::NoContent("article has no <body>".into()));
    }

    if let Some(year) = date_parts.0.as_deref().and_then(|y| y.parse().ok()) {
        raw.year = Some(year);
        if let (Some(m), Some(d)) = (&date_parts.1, &date_parts.2) {
            if let (Ok(m), Ok(d)) = (m.parse::<u32>(), d.parse::<u32>()) {
                raw.date = Some(format!("{year:04}-{m:02}-{d:02}"));
            }
        }
    }
    raw.authors = authors
        .into_iter()
        .map(|a| {
            let name = normalize_ws(&format!("{} {}", a.given, a.surname));
            let affiliation = a
                .inline_aff
                .or_else(|| a.aff_ids.iter().find_map(|id| affs.get(id).cloned()));
            AuthorRef {
                name,
                affiliation,
                orcid: a.orcid,
            }
        })
        .filter(|a| !a.name.is_empty())
        .collect();
    Ok(raw)
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const JATS: &str = r#"<?xml version="1.0"?>
<article>
  <front>
    <journal-meta><publisher><publisher-name>PLOS</publisher-name></publisher></journal-meta>
    <article-meta>
      <article-id pub-id-type="pmid">123</article-id>
      <article-id pub-id-type="doi">10.1371/journal.pone.0000001</article-id>
      <title-group><article-title>Software &amp; <italic>Science</italic></article-title></title-group>
      <contrib-group>
        <contrib contrib-type="author">
          <contrib-id contrib-id-type="orcid">0000-0002-1825-0097</contrib-id>
          <name><surname>Doe</surname><given-names>Jane</given-names></name>
          <xref ref-type="aff" rid="aff1"/>
        </contrib>
      </contrib-group>
      <aff id="aff1"><label>1</label>University of Somewhere, Rostock, Germany</aff>
      <pub-date pub-type="epub"><day>3</day><month>5</month><year>2019</year></pub-date>
    </article-meta>
  </front>
  <body>
    <sec><title>Methods</title>
      <p>We used <italic>SPSS</italic> software version 23 (SPSS Inc., Chicago, USA).</p>
      <sec><title>Statistics</title><p>Models were fitted in R.</p></sec>
      <fig><caption><p>Figure text.</p></caption></fig>
    </sec>
  </body>
  <back><sec><title>Acknowledgements</title><p>Thanks.</p></sec></back>
</article>"#;

    #[test]
    fn jats_single_section() {
        let doc = parse_article(JATS.as_bytes(), ArticleFormat::JatsXml, "a/b.xml").unwrap();
        assert_eq!(doc.id, "10.1371/journal.pone.0000001");
        assert_eq!(doc.title, "Software & Science");
        assert_eq!(doc.year, Some(2019));
        assert_eq!(doc.date.as_deref(), Some("2019-05-03"));
        assert_eq!(doc.publisher.as_deref(), Some("PLOS"));
        assert_eq!(doc.sections.len(), 1);
        let sec = &doc.sections[0];
        assert_eq!(sec.heading, "Methods");
        assert_eq!(
            sec.text,
            "We used SPSS software version 23 (SPSS Inc., Chicago, USA).\n\nModels were fitted in R."
        );
        assert_eq!(doc.authors.len(), 1);
        assert_eq!(doc.authors[0].name, "Jane Doe");
        assert_eq!(
            doc.authors[0].affiliation.as_deref(),
            Some("University of Somewhere, Rostock, Germany")
        );
        assert_eq!(doc.authors[0].orcid.as_deref(), Some("0000-0002-1825-0097"));
        assert!(find_mm_section(&doc, &HeadingSet::default()).is_some());
    }

    #[test]
    fn jats_errors() {
        let err = parse_article(
            b"<article><body><p>x</b></body></article>",
            ArticleFormat::JatsXml,
            "x.xml",
        )
        .unwrap_err();
        match err {
            Error::Xml { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_article(
            b"<article><body></body></article>",
            ArticleFormat::JatsXml,
            "x.xml",
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoContent(_)));
        let err =
            parse_article(b"<article><body><p>open", ArticleFormat::JatsXml, "x.xml").unwrap_err();
        assert!(matches!(err, Error::Xml { .. }));
    }

    #[test]
    fn jats_without_sections_uses_synthetic_body() {
        let xml = "<article><body><p>Just text.</p></body></article>";
        let doc = parse_article(xml.as_bytes(), ArticleFormat::JatsXml, "dir/plain.xml").unwrap();
        assert_eq!(doc.id, "plain");
        assert_eq!(doc.sections.len(), 1);
        assert_eq!(doc.sections[0].heading, "body");
    }

    #[test]
    fn plain_text_heading_splitter() {
        let text = "Title: A study\nYear: 2018\nAuthors: Jane Doe | Uni A; John Roe\n\nIntroduction\n\nSome intro text.\nMore intro.\n\nMaterials and Methods\n\nWe used SPSS software.\n\nData were analysed in R.\n\nResults\n\nIt worked.\n";
        let doc =
            parse_article(text.as_bytes(), ArticleFormat::PlainText, "corpus/p1.txt").unwrap();
        assert_eq!(doc.id, "p1");
        assert_eq!(doc.title, "A study");
        assert_eq!(doc.year, Some(2018));
        assert_eq!(doc.authors[0].affiliation.as_deref(), Some("Uni A"));
        let headings: Vec<_> = doc.sections.iter().map(|s| s.heading.as_str()).collect();
        assert_eq!(
            headings,
            ["Introduction", "Materials and Methods", "Results"]
        );
        assert_eq!(
            doc.sections[1].text,
            "We used SPSS software.\n\nData were analysed in R."
        );
        for s in &doc.sections {
            assert_eq!(
                &doc.text[s.char_offset..s.char_offset + s.text.len()],
                s.text
            );
        }
        let mm = find_mm_section(&doc, &HeadingSet::default()).unwrap();
        assert_eq!(mm.heading, "Materials and Methods");
    }

    #[test]
    fn plain_text_without_headings() {
        let doc = parse_article(
            b"just one paragraph of text.",
            ArticleFormat::PlainText,
            "x.txt",
        )
        .unwrap();
        assert_eq!(doc.sections.len(), 1);
        assert_eq!(doc.sections[0].heading, "body");
        let err = parse_article(b"  \n\n ", ArticleFormat::PlainText, "x.txt").unwrap_err();
        assert!(matches!(err, Error::NoContent(_)));
        let err = parse_article(&[0xff, 0xfe], ArticleFormat::PlainText, "x.txt").unwrap_err();
        assert!(matches!(err, Error::Utf8(_)));
    }

    fn doc_with_headings(headings: &[&str]) -> Document {
        let text: String = headings
            .iter()
            .map(|h| format!("{h}\n\nSome text here.\n\n"))
            .collect();
        parse_article(text.as_bytes(), ArticleFormat::PlainText, "h.txt").unwrap()
    }

    #[test]
    fn mm_section_lookup() {
        let set = HeadingSet::default();
        let doc = doc_with_headings(&["Introduction", "Materials and Methods", "Results"]);
        assert_eq!(
            find_mm_section(&doc, &set).unwrap().heading,
            "Materials and Methods"
        );
        let doc = doc_with_headings(&["Methods"]);
        assert!(find_mm_section(&doc, &set).is_some());
        let doc = doc_with_headings(&["Introduction", "Discussion"]);
        assert!(find_mm_section(&doc, &set).is_none());
        for h in [
            "2. Materials & Methods",
            "METHODS AND MATERIALS",
            "Study design and methods:",
        ] {
            assert!(set.matches(h), "{h}");
        }
        // first match wins
        let mut doc = doc_with_headings(&["Methods", "Materials and Methods"]);
        assert_eq!(doc.mark_mm(&set), Some(0));
        assert!(doc.sections[0].is_mm && !doc.sections[1].is_mm);
    }

    #[test]
    fn mm_sentences_carry_document_offsets() {
        let mut doc = doc_with_headings(&["Introduction", "Methods"]);
        doc.mark_mm(&HeadingSet::default());
        let sents = doc.mm_sentences(&StopWords::english());
        assert_eq!(sents.len(), 1);
        let s = &sents[0];
        assert_eq!(s.doc_id, doc.id);
        assert_eq!(&doc.text[s.offset..s.offset + s.text.len()], s.text);
        assert_eq!(s.offset, doc.sections[1].char_offset);
    }
}
