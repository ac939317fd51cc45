//! Per-run manifests.
//!
//! Text format, one record per line, tab-separated:
//!
//! ```text
//! swkg-manifest 1
//! stage   <name>
//! version <tool version>
//! config  <sha256 of the effective configuration>
//! input   <role> <sha256>
//! output  <file name> <format> <sha256>
//! ```
//!
//! Paths are omitted so that identical runs in different directories yield
//! identical manifests.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub const MANIFEST_HEADER: &str = "swkg-manifest 1";
pub const MANIFEST_DIR: &str = "manifests";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Content hash of a directory's regular files, by sorted relative name.
pub fn dir_sha256(dir: &Path) -> Result<String> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut h = Sha256::new();
    for p in entries {
        h.update(p.file_name().unwrap_or_default().as_encoded_bytes());
        h.update([0]);
        h.update(file_sha256(&p)?.as_bytes());
        h.update(*b"\n");
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub inputs: Vec<(String, String)>,
    /// `(file, format, sha256)`.
    pub outputs: Vec<(String, String, String)>,
}

impl Manifest {
    pub fn new(stage: &str, config_hash: &str) -> Self {
        Manifest {
            stage: stage.to_string(),
            config_hash: config_hash.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records a file or directory input under a role name.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let h = if path.is_dir() {
            dir_sha256(path)?
        } else {
            file_sha256(path)?
        };
        self.inputs.push((role.to_string(), h));
        Ok(())
    }

    pub fn output(&mut self, name: &str, format: &str, bytes: &[u8]) {
        self.outputs
            .push((name.to_string(), format.to_string(), sha256_hex(bytes)));
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{MANIFEST_HEADER}\nstage\t{}\nversion\t{}\nconfig\t{}\n",
            self.stage,
            env!("CARGO_PKG_VERSION"),
            self.config_hash
        );
        for (role, h) in &self.inputs {
            let _ = writeln!(s, "input\t{role}\t{h}");
        }
        for (name, format, h) in &self.outputs {
            let _ = writeln!(s, "output\t{name}\t{format}\t{h}");
        }
        s
    }

    pub fn write(&self, output_dir: &Path) -> Result<()> {
        let dir = output_dir.join(MANIFEST_DIR);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}.manifest", self.stage));
        std::fs::write(&path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}
