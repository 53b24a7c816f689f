//! Store directory layout: one `<fem>.ffdt` per descriptor plus `index.csv`
//! mapping image ids to source paths.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ffiredt::{DescriptorId, FeatureStore, Label};

pub const INDEX_FILE: &str = "index.csv";

pub fn store_path(dir: &Path, id: DescriptorId) -> PathBuf {
    dir.join(format!("{}.ffdt", id.code().to_lowercase()))
}

pub fn open_store(dir: &Path, id: DescriptorId) -> Result<FeatureStore> {
    let path = store_path(dir, id);
    if !path.exists() {
        return Err(anyhow!(
            "no {id} store at {}; run `ffiredt extract` first",
            path.display()
        ));
    }
    let store = FeatureStore::open_existing(&path).with_context(|| format!("opening {}", path.display()))?;
    if store.descriptor() != id {
        return Err(anyhow!("{} holds {} vectors, expected {id}", path.display(), store.descriptor()));
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRow {
    pub image_id: u64,
    pub path: String,
    pub label: Label,
}

pub fn write_index(dir: &Path, rows: &[IndexRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(INDEX_FILE))?;
    w.write_record(["image_id", "path", "label"])?;
    for r in rows {
        w.write_record([r.image_id.to_string(), r.path.clone(), r.label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `index.csv`; an absent index yields an empty map.
pub fn read_index(dir: &Path) -> Result<BTreeMap<u64, IndexRow>> {
    let path = dir.join(INDEX_FILE);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let mut reader = csv::Reader::from_path(&path)?;
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let image_id: u64 = record
            .get(0)
            .unwrap_or("")
            .parse()
            .with_context(|| format!("{}: bad image id", path.display()))?;
        let label: Label = record.get(2).unwrap_or("").parse()?;
        out.insert(
            image_id,
            IndexRow {
                image_id,
                path: record.get(1).unwrap_or("").to_string(),
                label,
            },
        );
    }
    Ok(out)
}
