//! Corpus manifests: CSV rows of `path,label`, `#` comments, optional header.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ffiredt::Label;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: Label,
}

/// Reads a manifest. Relative paths resolve against the manifest's directory
/// and a missing label reads as unlabeled.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed row", path.display()))?;
        let file = record.get(0).unwrap_or("");
        let label = record.get(1).unwrap_or("");
        if i == 0 && file.eq_ignore_ascii_case("path") && label.eq_ignore_ascii_case("label") {
            continue;
        }
        if file.is_empty() {
            continue;
        }
        let label: Label = label
            .parse()
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let resolved = if Path::new(file).is_absolute() {
            PathBuf::from(file)
        } else {
            base.join(file)
        };
        if !seen.insert(resolved.clone()) {
            bail!("{}: duplicate path {file}", path.display());
        }
        rows.push(ManifestRow { path: resolved, label });
    }
    Ok(rows)
}
