//! Content hashes of an output bundle.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "MANIFEST";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub complete: bool,
    /// Failure reason when incomplete.
    pub note: Option<String>,
    /// `(relative path, sha256 hex)`, sorted by path.
    pub files: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if path != root.join(MANIFEST_NAME) {
            out.push(path);
        }
    }
    Ok(())
}

impl Manifest {
    /// Hash every file under `dir` except the manifest itself.
    pub fn scan(dir: &Path, complete: bool, note: Option<String>) -> Result<Self> {
        let mut paths = Vec::new();
        collect(dir, dir, &mut paths)?;
        let mut files = paths
            .iter()
            .map(|p| {
                let rel = p
                    .strip_prefix(dir)
                    .map_err(|_| Error::Format("file outside bundle".into()))?
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                Ok((rel, sha256_hex(&std::fs::read(p)?)))
            })
            .collect::<Result<Vec<_>>>()?;
        files.sort();
        Ok(Self {
            complete,
            note,
            files,
        })
    }

    /// Hash the listed files, given relative to `dir`.
    pub fn from_files(dir: &Path, complete: bool, note: Option<String>, paths: &[String]) -> Result<Self> {
        let mut files = paths
            .iter()
            .map(|rel| Ok((rel.clone(), sha256_hex(&std::fs::read(dir.join(rel))?))))
            .collect::<Result<Vec<_>>>()?;
        files.sort();
        files.dedup();
        Ok(Self {
            complete,
            note,
            files,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "status = {}\n",
            if self.complete { "complete" } else { "incomplete" }
        );
        if let Some(n) = &self.note {
            let _ = writeln!(s, "note = {}", n.replace('\n', " "));
        }
        let _ = writeln!(s, "files = {}", self.files.len());
        for (path, hash) in &self.files {
            let _ = writeln!(s, "{hash}  {path}");
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_NAME), self.to_text())?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
        let mut complete = None;
        let mut note = None;
        let mut files = Vec::new();
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("status = ") {
                complete = Some(v == "complete");
            } else if let Some(v) = line.strip_prefix("note = ") {
                note = Some(v.to_string());
            } else if line.starts_with("files = ") {
            } else if let Some((hash, path)) = line.split_once("  ") {
                files.push((path.to_string(), hash.to_string()));
            } else if !line.trim().is_empty() {
                return Err(Error::Format(format!("bad manifest line '{line}'")));
            }
        }
        Ok(Self {
            complete: complete.ok_or_else(|| Error::Format("manifest lacks a status".into()))?,
            note,
            files,
        })
    }

    /// Paths whose current content no longer matches the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (path, hash) in &self.files {
            match std::fs::read(dir.join(path)) {
                Ok(bytes) if sha256_hex(&bytes) == *hash => {}
                _ => bad.push(path.clone()),
            }
        }
        Ok(bad)
    }
}
