//! CSV manifests naming the input files of a batch.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// One input case.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CaseEntry {
    pub case_id: String,
    #[serde(alias = "flair_path")]
    pub path: PathBuf,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub mask_path: Option<PathBuf>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub scanner_label: Option<String>,
}

/// One predicted mask of one model.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PredEntry {
    pub case_id: String,
    pub model: String,
    pub path: PathBuf,
}

fn empty_as_none<'de, D, T>(d: D) -> std::result::Result<Option<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: From<String>,
{
    let s: Option<String> = Option::deserialize(d)?;
    Ok(s.filter(|s| !s.trim().is_empty()).map(T::from))
}

/// Relative paths are taken relative to the manifest's directory.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open manifest {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize().enumerate() {
        rows.push(rec.with_context(|| format!("{}: bad row {}", path.display(), i + 2))?);
    }
    if rows.is_empty() {
        bail!(
            "manifest {} lists no cases; expected a CSV header followed by one row per case",
            path.display()
        );
    }
    Ok(rows)
}

fn ensure_unique(path: &Path, keys: impl Iterator<Item = String>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for k in keys {
        if !seen.insert(k.clone()) {
            bail!("{}: duplicate entry {k}", path.display());
        }
    }
    Ok(())
}

pub fn read_cases(path: &Path) -> Result<Vec<CaseEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows: Vec<CaseEntry> = read_rows(path)?;
    ensure_unique(path, rows.iter().map(|r| r.case_id.clone()))?;
    for r in &mut rows {
        r.path = resolve(base, &r.path);
        r.mask_path = r.mask_path.as_deref().map(|m| resolve(base, m));
    }
    Ok(rows)
}

pub fn read_preds(path: &Path) -> Result<Vec<PredEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows: Vec<PredEntry> = read_rows(path)?;
    ensure_unique(
        path,
        rows.iter().map(|r| format!("{}/{}", r.case_id, r.model)),
    )?;
    for r in &mut rows {
        r.path = resolve(base, &r.path);
    }
    Ok(rows)
}
