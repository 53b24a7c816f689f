//! Persistent labeled feature vectors with exact linear-scan kNN.
//!
//! File layout, little-endian:
//!
//! ```text
//! "FFDT" | version u16 = 1 | descriptor u16 | dimension u32 | count u64
//! record* = image_id u64 | label u8 | dimension × f32
//! ```
//!
//! The header count is rewritten when the store is closed. Values are held
//! at `f32` precision both on disk and in memory so a reopened store is
//! bit-identical to the one that was written.

use std::collections::HashSet;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::descriptors::{DescriptorId, FeatureVector};
use crate::error::{Error, Result};
use crate::evalfuncs::{check_comparable, EvaluationFunctionId};

pub const MAGIC: &[u8; 4] = b"FFDT";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 20;
const COUNT_OFFSET: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotFire,
    Fire,
    Unlabeled,
}

impl Label {
    pub fn wire(self) -> u8 {
        match self {
            Label::NotFire => 0,
            Label::Fire => 1,
            Label::Unlabeled => 2,
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        match b {
            0 => Some(Label::NotFire),
            1 => Some(Label::Fire),
            2 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NotFire => "not_fire",
            Label::Fire => "fire",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fire" => Ok(Label::Fire),
            "not_fire" | "not-fire" | "notfire" => Ok(Label::NotFire),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            other => Err(Error::Config(format!("unknown label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredInstance {
    pub image_id: u64,
    pub label: Label,
    pub vector: FeatureVector,
}

impl StoredInstance {
    pub fn new(label: Label, vector: FeatureVector) -> Self {
        StoredInstance {
            image_id: vector.image_id,
            label,
            vector,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub image_id: u64,
    pub label: Label,
    pub distance: f64,
}

/// Neighbours in ascending distance, ties broken by ascending image id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnnResult {
    pub neighbors: Vec<Neighbor>,
}

impl KnnResult {
    pub fn ids(&self) -> Vec<u64> {
        self.neighbors.iter().map(|n| n.image_id).collect()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// An in-memory set of instances sharing one descriptor and dimension.
#[derive(Debug, Clone)]
pub struct Collection {
    descriptor: DescriptorId,
    dim: usize,
    instances: Vec<StoredInstance>,
    ids: HashSet<u64>,
}

impl Collection {
    pub fn new(descriptor: DescriptorId, dim: usize) -> Self {
        Collection {
            descriptor,
            dim,
            instances: Vec::new(),
            ids: HashSet::new(),
        }
    }

    pub fn descriptor(&self) -> DescriptorId {
        self.descriptor
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// All instances in insertion order.
    pub fn instances(&self) -> &[StoredInstance] {
        &self.instances
    }

    pub fn get(&self, image_id: u64) -> Option<&StoredInstance> {
        self.ids
            .contains(&image_id)
            .then(|| self.instances.iter().find(|i| i.image_id == image_id))
            .flatten()
    }

    fn validate(&self, inst: &StoredInstance) -> Result<()> {
        if inst.vector.descriptor != self.descriptor {
            return Err(Error::DescriptorMismatch {
                expected: self.descriptor.code(),
                actual: inst.vector.descriptor.code(),
            });
        }
        if inst.vector.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: inst.vector.dim(),
            });
        }
        if self.ids.contains(&inst.image_id) {
            return Err(Error::DuplicateKey(inst.image_id));
        }
        Ok(())
    }

    pub fn insert(&mut self, inst: StoredInstance) -> Result<()> {
        self.validate(&inst)?;
        self.ids.insert(inst.image_id);
        self.instances.push(inst);
        Ok(())
    }

    fn check_query(&self, query: &FeatureVector) -> Result<()> {
        if query.descriptor != self.descriptor {
            return Err(Error::DescriptorMismatch {
                expected: self.descriptor.code(),
                actual: query.descriptor.code(),
            });
        }
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        check_comparable(&query.values, &query.values)
    }

    /// Exact kNN over instances accepted by `keep`.
    pub fn search(
        &self,
        query: &FeatureVector,
        k: usize,
        ef: EvaluationFunctionId,
        keep: impl Fn(&StoredInstance) -> bool,
    ) -> Result<KnnResult> {
        self.check_query(query)?;
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let mut scored: Vec<Neighbor> = self
            .instances
            .iter()
            .filter(|i| keep(i))
            .map(|i| Neighbor {
                image_id: i.image_id,
                label: i.label,
                distance: ef.distance(&query.values, &i.vector.values),
            })
            .collect();
        if scored.is_empty() {
            return Err(Error::EmptyStore);
        }
        let order = |a: &Neighbor, b: &Neighbor| {
            a.distance.total_cmp(&b.distance).then(a.image_id.cmp(&b.image_id))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(KnnResult { neighbors: scored })
    }

    /// kNN restricted to one label when `label_filter` is set.
    pub fn knn(
        &self,
        query: &FeatureVector,
        k: usize,
        ef: EvaluationFunctionId,
        label_filter: Option<Label>,
    ) -> Result<KnnResult> {
        self.search(query, k, ef, |i| label_filter.is_none_or(|l| i.label == l))
    }
}

/// Rounds every component to `f32` precision, as stored on disk.
pub fn to_storage_precision(mut v: FeatureVector) -> FeatureVector {
    for x in &mut v.values {
        *x = f64::from(*x as f32);
    }
    v
}

struct Header {
    descriptor: DescriptorId,
    dim: usize,
    count: u64,
}

fn encode_header(descriptor: DescriptorId, dim: usize, count: u64) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN as usize);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&descriptor.wire_id().to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    buf
}

fn decode_header(bytes: &[u8]) -> Result<Header> {
    let bad = |offset: u64, reason: &str| Error::StoreFormat {
        offset,
        reason: reason.into(),
    };
    if bytes.len() < HEADER_LEN as usize {
        return Err(bad(bytes.len() as u64, "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad(0, "bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(bad(4, &format!("unsupported version {version}")));
    }
    let wire = u16::from_le_bytes([bytes[6], bytes[7]]);
    let descriptor = DescriptorId::from_wire_id(wire).ok_or_else(|| bad(6, &format!("unknown descriptor id {wire}")))?;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(bad(8, "zero dimension"));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    Ok(Header { descriptor, dim, count })
}

fn record_len(dim: usize) -> u64 {
    9 + 4 * dim as u64
}

fn encode_record(inst: &StoredInstance, out: &mut Vec<u8>) {
    out.extend_from_slice(&inst.image_id.to_le_bytes());
    out.push(inst.label.wire());
    for &v in &inst.vector.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Parses a whole store file.
fn decode_file(bytes: &[u8]) -> Result<(Header, Vec<StoredInstance>)> {
    let header = decode_header(bytes)?;
    let rec = record_len(header.dim);
    let body = bytes.len() as u64 - HEADER_LEN;
    let complete = body / rec;
    if body % rec != 0 {
        return Err(Error::StoreFormat {
            offset: HEADER_LEN + complete * rec,
            reason: format!("truncated record ({} of {rec} bytes)", body % rec),
        });
    }
    if complete < header.count {
        return Err(Error::StoreFormat {
            offset: bytes.len() as u64,
            reason: format!("header declares {} records, file holds {complete}", header.count),
        });
    }
    if complete > header.count {
        log::warn!(
            "store header declares {} records but {complete} are present; store was not closed cleanly",
            header.count
        );
    }
    let mut instances = Vec::with_capacity(complete as usize);
    for i in 0..complete {
        let start = (HEADER_LEN + i * rec) as usize;
        let r = &bytes[start..start + rec as usize];
        let image_id = u64::from_le_bytes(r[..8].try_into().unwrap());
        let label = Label::from_wire(r[8]).ok_or_else(|| Error::StoreFormat {
            offset: start as u64 + 8,
            reason: format!("invalid label byte {}", r[8]),
        })?;
        let mut values = Vec::with_capacity(header.dim);
        for (j, chunk) in r[9..].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::StoreFormat {
                    offset: start as u64 + 9 + 4 * j as u64,
                    reason: "non-finite value".into(),
                });
            }
            values.push(f64::from(v));
        }
        instances.push(StoredInstance {
            image_id,
            label,
            vector: FeatureVector::new(header.descriptor, values, image_id),
        });
    }
    Ok((header, instances))
}

/// File-backed [`Collection`]. Single writer; `&self` queries may run
/// concurrently.
#[derive(Debug)]
pub struct FeatureStore {
    path: PathBuf,
    file: File,
    collection: Collection,
    persisted_count: u64,
}

impl FeatureStore {
    /// Opens `path`, creating an empty store when absent. An existing file
    /// must carry the same descriptor and dimension.
    pub fn open(path: impl AsRef<Path>, descriptor: DescriptorId, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            let mut file = OpenOptions::new().read(true).write(true).create_new(true).open(path)?;
            file.write_all(&encode_header(descriptor, dim, 0))?;
            file.flush()?;
            return Ok(FeatureStore {
                path: path.to_path_buf(),
                file,
                collection: Collection::new(descriptor, dim),
                persisted_count: 0,
            });
        }
        let store = Self::open_existing(path)?;
        if store.descriptor() != descriptor {
            return Err(Error::StoreFormat {
                offset: 6,
                reason: format!("store holds {}, requested {descriptor}", store.descriptor()),
            });
        }
        if store.dim() != dim {
            return Err(Error::StoreFormat {
                offset: 8,
                reason: format!("store dimension {}, requested {dim}", store.dim()),
            });
        }
        Ok(store)
    }

    /// Opens an existing store, taking descriptor and dimension from its header.
    pub fn open_existing(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let (header, instances) = decode_file(&bytes)?;
        let mut collection = Collection::new(header.descriptor, header.dim);
        let n = instances.len() as u64;
        for inst in instances {
            let id = inst.image_id;
            collection.insert(inst).map_err(|_| Error::StoreFormat {
                offset: HEADER_LEN,
                reason: format!("duplicate image id {id} in file"),
            })?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok(FeatureStore {
            path: path.to_path_buf(),
            file,
            collection,
            persisted_count: header.count.min(n),
        })
    }

    /// Reads every record of a store file in insertion order.
    pub fn scan_file(path: impl AsRef<Path>) -> Result<Vec<StoredInstance>> {
        let bytes = std::fs::read(path)?;
        Ok(decode_file(&bytes)?.1)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn descriptor(&self) -> DescriptorId {
        self.collection.descriptor()
    }

    pub fn dim(&self) -> usize {
        self.collection.dim()
    }

    pub fn len(&self) -> usize {
        self.collection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.collection.is_empty()
    }

    pub fn collection(&self) -> &Collection {
        &self.collection
    }

    /// Every record in insertion order.
    pub fn scan(&self) -> &[StoredInstance] {
        self.collection.instances()
    }

    /// Appends one record. Values are rounded to `f32` precision.
    pub fn insert(&mut self, inst: StoredInstance) -> Result<()> {
        let inst = StoredInstance {
            vector: to_storage_precision(inst.vector),
            ..inst
        };
        self.collection.validate(&inst)?;
        let mut buf = Vec::with_capacity(record_len(self.dim()) as usize);
        encode_record(&inst, &mut buf);
        self.file.seek(SeekFrom::End(0))?;
        self.file.write_all(&buf)?;
        self.file.flush()?;
        self.collection.insert(inst)
    }

    pub fn knn(
        &self,
        query: &FeatureVector,
        k: usize,
        ef: EvaluationFunctionId,
        label_filter: Option<Label>,
    ) -> Result<KnnResult> {
        self.collection.knn(query, k, ef, label_filter)
    }

    fn write_count(&mut self) -> Result<()> {
        let count = self.collection.len() as u64;
        if count != self.persisted_count {
            self.file.seek(SeekFrom::Start(COUNT_OFFSET))?;
            self.file.write_all(&count.to_le_bytes())?;
            self.file.sync_data()?;
            self.file.seek(SeekFrom::End(0))?;
            self.persisted_count = count;
        }
        Ok(())
    }

    /// Rewrites the header count and syncs.
    pub fn close(mut self) -> Result<()> {
        self.write_count()
    }
}

impl Drop for FeatureStore {
    fn drop(&mut self) {
        if let Err(e) = self.write_count() {
            log::error!("failed to finalize store {}: {e}", self.path.display());
        }
    }
}
