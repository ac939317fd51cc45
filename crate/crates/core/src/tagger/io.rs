//! Line-based model file.
//!
//! ```text
//! swkg-crf v1
//! template <template id>
//! start <O> <B> <I>
//! trans <from> <O> <B> <I>
//! feat <name> <O> <B> <I>
//! ```
//! Fields are tab-separated, features sorted by name, floats written in
//! shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use super::crf::{CrfModel, N_LABELS};
use crate::corpus::BioTag;
use crate::error::{read_to_string, Error, Result};

const MAGIC: &str = "swkg-crf v1";

pub fn model_to_string(m: &CrfModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "template\t{}", m.template);
    let row = |vals: [f64; N_LABELS]| {
        vals.iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join("\t")
    };
    let _ = writeln!(out, "start\t{}", row([m.start(0), m.start(1), m.start(2)]));
    for from in 0..N_LABELS {
        let _ = writeln!(
            out,
            "trans\t{}\t{}",
            BioTag::from_index(from),
            row([m.trans(from, 0), m.trans(from, 1), m.trans(from, 2)])
        );
    }
    for (f, name) in m.features().iter().enumerate() {
        let f = f as u32;
        let _ = writeln!(
            out,
            "feat\t{name}\t{}",
            row([m.feat(f, 0), m.feat(f, 1), m.feat(f, 2)])
        );
    }
    out
}

pub fn model_from_str(text: &str, source: &str) -> Result<CrfModel> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => {
            return Err(Error::format(
                source,
                1,
                format!("expected `{MAGIC}` header"),
            ))
        }
    }
    let mut template = String::new();
    let mut start = [0.0; N_LABELS];
    let mut trans = [[0.0; N_LABELS]; N_LABELS];
    let mut feats: Vec<(String, [f64; N_LABELS])> = Vec::new();
    let parse3 = |cols: &[&str], line: usize| -> Result<[f64; N_LABELS]> {
        if cols.len() != N_LABELS {
            return Err(Error::format(source, line, "expected three weights"));
        }
        let mut out = [0.0; N_LABELS];
        for (o, c) in out.iter_mut().zip(cols) {
            *o = c
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::format(source, line, format!("bad weight `{c}`")))?;
        }
        Ok(out)
    };
    for (n, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        match cols.as_slice() {
            ["template", t] => template = t.to_string(),
            ["start", rest @ ..] => start = parse3(rest, n + 1)?,
            ["trans", from, rest @ ..] => {
                let from: BioTag = from
                    .parse()
                    .map_err(|e: String| Error::format(source, n + 1, e))?;
                trans[from.index()] = parse3(rest, n + 1)?;
            }
            ["feat", name, rest @ ..] => feats.push((name.to_string(), parse3(rest, n + 1)?)),
            [""] => {}
            _ => return Err(Error::format(source, n + 1, "unrecognized model line")),
        }
    }
    let mut m = CrfModel::new(&template, feats.iter().map(|f| f.0.clone()).collect());
    if m.num_features() != feats.len() {
        return Err(Error::format(source, 0, "duplicate feature names"));
    }
    for y in 0..N_LABELS {
        m.weights[CrfModel::start_index(y)] = start[y];
        for (from, row) in trans.iter().enumerate() {
            m.weights[CrfModel::trans_index(from, y)] = row[y];
        }
    }
    for (name, w) in feats {
        let f = m.feature_id(&name).expect("feature registered");
        for (y, v) in w.iter().enumerate() {
            m.weights[CrfModel::feat_index(f, y)] = *v;
        }
    }
    Ok(m)
}

pub fn save_model(m: &CrfModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CrfModel> {
    model_from_str(&read_to_string(path)?, &path.display().to_string())
}
