use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::kb::{Kb, KbEntry};
use super::normalize::Normalizer;
use crate::tagger::Mention;
use crate::weaksup::COMPANY_SUFFIXES;

/// One distinct surface and where it occurs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MentionString {
    pub surface: String,
    pub frequency: usize,
    /// `(doc_id, (start, end))` byte spans.
    pub doc_refs: Vec<(String, (usize, usize))>,
}

/// Groups tagged mentions by surface.
pub fn mention_strings(mentions: &[Mention]) -> Vec<MentionString> {
    let mut by_surface: BTreeMap<&str, Vec<(String, (usize, usize))>> = BTreeMap::new();
    for m in mentions {
        by_surface
            .entry(m.surface.as_str())
            .or_default()
            .push((m.doc_id.clone(), (m.start, m.end)));
    }
    by_surface
        .into_iter()
        .map(|(surface, mut doc_refs)| {
            doc_refs.sort();
            MentionString {
                surface: surface.to_string(),
                frequency: doc_refs.len(),
                doc_refs,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionCluster {
    /// Sorted by surface.
    pub members: Vec<MentionString>,
    pub normal_form: String,
    pub abbreviation: String,
    pub kb_id: Option<String>,
    pub kb_label: Option<String>,
    /// Matched several KB entries in one linking pass.
    pub ambiguous: bool,
    pub representative_name: String,
}

impl MentionCluster {
    fn new(members: Vec<MentionString>, normal_form: String, nz: &Normalizer) -> Self {
        let mut c = MentionCluster {
            members,
            normal_form,
            abbreviation: String::new(),
            kb_id: None,
            kb_label: None,
            ambiguous: false,
            representative_name: String::new(),
        };
        c.refresh(nz);
        c
    }

    fn refresh(&mut self, nz: &Normalizer) {
        self.members.sort();
        let top = most_frequent(&self.members);
        self.abbreviation = nz.abbreviate(&top.surface);
        self.representative_name = representative_name(self);
    }

    pub fn frequency(&self) -> usize {
        self.members.iter().map(|m| m.frequency).sum()
    }

    fn absorb(&mut self, other: MentionCluster, nz: &Normalizer) {
        self.members.extend(other.members);
        self.refresh(nz);
    }
}

fn most_frequent(members: &[MentionString]) -> &MentionString {
    members
        .iter()
        .max_by(|a, b| {
            a.frequency
                .cmp(&b.frequency)
                .then_with(|| b.surface.cmp(&a.surface))
        })
        .expect("cluster has members")
}

/// KB label when linked, else the most frequent surface (ties: smallest).
pub fn representative_name(c: &MentionCluster) -> String {
    match (&c.kb_id, &c.kb_label) {
        (Some(_), Some(label)) => label.clone(),
        _ => most_frequent(&c.members).surface.clone(),
    }
}

fn sort_clusters(clusters: &mut [MentionCluster]) {
    clusters.sort_by(|a, b| {
        a.representative_name
            .cmp(&b.representative_name)
            .then_with(|| a.normal_form.cmp(&b.normal_form))
            .then_with(|| a.members.cmp(&b.members))
    });
}

fn single_token_key(surface: &str) -> Option<String> {
    let s = surface.trim();
    if s.split_whitespace().count() != 1 {
        return None;
    }
    let key: String = s
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    (!key.is_empty()).then_some(key)
}

/// Stage 1 merges equal normal forms; stage 2 merges a multi-word cluster
/// into the single-token cluster its abbreviation spells.
pub fn cluster_mentions(mentions: &[MentionString], nz: &Normalizer) -> Vec<MentionCluster> {
    let mut merged: BTreeMap<&str, MentionString> = BTreeMap::new();
    for m in mentions {
        let e = merged
            .entry(m.surface.as_str())
            .or_insert_with(|| MentionString {
                surface: m.surface.clone(),
                frequency: 0,
                doc_refs: Vec::new(),
            });
        e.frequency += m.frequency;
        e.doc_refs.extend(m.doc_refs.iter().cloned());
    }
    let mut by_form: BTreeMap<String, Vec<MentionString>> = BTreeMap::new();
    for (_, mut m) in merged {
        m.doc_refs.sort();
        by_form.entry(nz.normalize(&m.surface)).or_default().push(m);
    }
    let stage1: Vec<MentionCluster> = by_form
        .into_iter()
        .map(|(form, members)| MentionCluster::new(members, form, nz))
        .collect();

    let mut single: HashMap<String, BTreeSet<usize>> = HashMap::new();
    for (i, c) in stage1.iter().enumerate() {
        if c.normal_form.contains(' ') {
            continue;
        }
        for m in &c.members {
            if let Some(k) = single_token_key(&m.surface) {
                single.entry(k).or_default().insert(i);
            }
        }
    }
    let mut target: Vec<Option<usize>> = vec![None; stage1.len()];
    for (i, c) in stage1.iter().enumerate() {
        if !c.normal_form.contains(' ') {
            continue;
        }
        let hits: BTreeSet<usize> = c
            .members
            .iter()
            .filter(|m| m.surface.split_whitespace().count() > 1)
            .filter_map(|m| single.get(&nz.abbreviate(&m.surface).to_lowercase()))
            .flatten()
            .copied()
            .collect();
        if hits.len() == 1 {
            target[i] = hits.first().copied();
        }
    }
    let mut slots: Vec<Option<MentionCluster>> = stage1.into_iter().map(Some).collect();
    for i in 0..slots.len() {
        if let Some(t) = target[i] {
            let c = slots[i].take().expect("multi-word cluster present");
            slots[t]
                .as_mut()
                .expect("single-token clusters are never moved")
                .absorb(c, nz);
        }
    }
    let mut out: Vec<MentionCluster> = slots.into_iter().flatten().collect();
    sort_clusters(&mut out);
    out
}

fn developer_variants(dev: &str) -> Vec<String> {
    let mut out = vec![dev.trim().to_string()];
    let mut words: Vec<&str> = dev.split_whitespace().collect();
    while let Some(last) = words.last() {
        let bare = last.trim_end_matches(['.', ',']);
        if words.len() > 1 && COMPANY_SUFFIXES.contains(&bare) {
            words.pop();
            if let Some(prev) = words.last_mut() {
                *prev = prev.trim_end_matches(',');
            }
        } else {
            break;
        }
    }
    let stripped = words.join(" ");
    if !out.contains(&stripped) {
        out.push(stripped);
    }
    out
}

/// Surface → KB entry indices, one table per linking pass.
fn pass_indexes(kb: &Kb) -> [HashMap<String, BTreeSet<usize>>; 3] {
    let mut idx: [HashMap<String, BTreeSet<usize>>; 3] = Default::default();
    let mut add = |pass: usize, name: &str, i: usize| {
        idx[pass].entry(name.to_string()).or_default().insert(i);
    };
    for (i, e) in kb.entries.iter().enumerate() {
        let KbEntry {
            label,
            redirects,
            aliases,
            disambiguates,
            developer,
            ..
        } = e;
        add(0, label, i);
        for r in redirects {
            add(0, r, i);
        }
        for (a, _) in aliases {
            add(1, a, i);
        }
        for d in disambiguates {
            add(1, d, i);
        }
        if let Some(dev) = developer {
            for d in developer_variants(dev) {
                add(2, &format!("{d} {label}"), i);
                add(2, &format!("{label} {d}"), i);
            }
        }
    }
    idx
}

/// Three linking passes: label or redirect, then aliases, then developer +
/// label. A cluster hitting several entries in a pass is flagged ambiguous
/// and left unlinked; clusters linked to the same entry merge.
pub fn link_kb(clusters: Vec<MentionCluster>, kb: &Kb, nz: &Normalizer) -> Vec<MentionCluster> {
    let indexes = pass_indexes(kb);
    let mut clusters = clusters;
    for idx in &indexes {
        for c in clusters
            .iter_mut()
            .filter(|c| c.kb_id.is_none() && !c.ambiguous)
        {
            let hits: BTreeSet<usize> = c
                .members
                .iter()
                .filter_map(|m| idx.get(m.surface.trim()))
                .flatten()
                .copied()
                .collect();
            match hits.len() {
                0 => {}
                1 => {
                    let e = &kb.entries[*hits.first().expect("one hit")];
                    c.kb_id = Some(e.id.clone());
                    c.kb_label = Some(e.label.clone());
                }
                _ => c.ambiguous = true,
            }
        }
        let mut by_id: BTreeMap<String, MentionCluster> = BTreeMap::new();
        let mut rest = Vec::new();
        for c in clusters {
            match c.kb_id.clone() {
                Some(id) => match by_id.get_mut(&id) {
                    Some(existing) => existing.absorb(c, nz),
                    None => {
                        by_id.insert(id, c);
                    }
                },
                None => rest.push(c),
            }
        }
        clusters = by_id.into_values().chain(rest).collect();
        for c in &mut clusters {
            c.refresh(nz);
        }
        sort_clusters(&mut clusters);
    }
    clusters
}

/// Surface → index of its cluster.
pub fn cluster_index(clusters: &[MentionCluster]) -> HashMap<&str, usize> {
    let mut out = HashMap::new();
    for (i, c) in clusters.iter().enumerate() {
        for m in &c.members {
            out.insert(m.surface.as_str(), i);
        }
    }
    out
}

/// Tab-separated report: representative, kb id, ambiguity flag, total
/// frequency, and `surface:count` members separated by `; `.
pub fn cluster_report(clusters: &[MentionCluster]) -> String {
    let mut out = String::from("representative\tkb_id\tambiguous\tfrequency\tmembers\n");
    for c in clusters {
        let members: Vec<String> = c
            .members
            .iter()
            .map(|m| format!("{}:{}", m.surface, m.frequency))
            .collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            c.representative_name,
            c.kb_id.as_deref().unwrap_or(""),
            c.ambiguous,
            c.frequency(),
            members.join("; ")
        ));
    }
    out
}
