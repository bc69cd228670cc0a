//! Prepared-dataset cache: a directory holding a JSON manifest, vocab text
//! files, feature bags, and flat binary interaction arrays per split.
//!
//! Layout (all integers little-endian):
//!   manifest.json      counts, imbalance factor, head fraction, seed, hash
//!   users.txt          one user id per line, vocab order
//!   items.txt          one item id per line, vocab order
//!   features.json      [{name, vocab: [..], bags: [[u32]]}] per item
//!   train.bin          records of (user u32, item u32, timestamp i64, label u8)
//!   valid.bin, test.bin, regularizer.bin   same record layout

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{
    build_stats, split_head_tail, Catalog, CatalogStats, FeatureField, Interaction,
    InteractionLog, SplitLog, Vocab,
};
use crate::error::{CdnError, Result};

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Everything downstream training and evaluation needs.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub split: SplitLog,
    pub stats: CatalogStats,
    pub head_fraction: f64,
    pub seed: u64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheManifest {
    pub format_version: u32,
    pub source: String,
    /// Hash of the dataset config that produced the cache; `prepare` skips
    /// rebuilding when it matches.
    pub config_hash: String,
    pub n_users: usize,
    pub n_items: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub n_regularizer: usize,
    pub imbalance_factor: f64,
    pub head_fraction: f64,
    pub n_head: usize,
    pub n_tail: usize,
    pub regularizer_cap: u64,
    pub seed: u64,
    pub fields: Vec<FieldInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldInfo {
    pub name: String,
    pub vocab_size: usize,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    name: String,
    vocab: Vec<String>,
    bags: Vec<Vec<u32>>,
}

fn write_interactions(path: &Path, events: &[Interaction]) -> Result<()> {
    let mut buf = Vec::with_capacity(events.len() * 17);
    for ev in events {
        buf.extend_from_slice(&ev.user.to_le_bytes());
        buf.extend_from_slice(&ev.item.to_le_bytes());
        buf.extend_from_slice(&ev.timestamp.to_le_bytes());
        buf.push(ev.label);
    }
    std::fs::write(path, buf).map_err(|e| CdnError::io(path, e))
}

fn read_interactions(path: &Path) -> Result<Vec<Interaction>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| CdnError::io(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| CdnError::io(path, e))?;
    if bytes.len() % 17 != 0 {
        return Err(CdnError::Data(format!(
            "{path:?} length {} is not a multiple of the 17-byte record size",
            bytes.len()
        )));
    }
    let mut events = Vec::with_capacity(bytes.len() / 17);
    for rec in bytes.chunks_exact(17) {
        events.push(Interaction {
            user: u32::from_le_bytes(rec[0..4].try_into().unwrap()),
            item: u32::from_le_bytes(rec[4..8].try_into().unwrap()),
            timestamp: i64::from_le_bytes(rec[8..16].try_into().unwrap()),
            label: rec[16],
        });
    }
    Ok(events)
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| CdnError::io(path, e))?;
    for line in lines {
        writeln!(f, "{line}").map_err(|e| CdnError::io(path, e))?;
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CdnError::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// FNV-1a over a canonical JSON rendering; good enough to detect config
/// drift between prepare runs.
pub fn config_fingerprint<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).unwrap_or_default();
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in json.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

pub fn write_cache(dir: &Path, data: &PreparedDataset, config_hash: &str) -> Result<CacheManifest> {
    std::fs::create_dir_all(dir).map_err(|e| CdnError::io(dir, e))?;
    let catalog = &data.split.train.catalog;
    let regularizer = data
        .split
        .regularizer
        .as_ref()
        .ok_or_else(|| CdnError::Data("cannot cache a split without a regularizer stream".into()))?;

    write_lines(&dir.join("users.txt"), catalog.users.ids())?;
    write_lines(&dir.join("items.txt"), catalog.items.ids())?;

    let fields: Vec<FieldJson> = catalog
        .gen_fields
        .iter()
        .map(|f| FieldJson {
            name: f.name.clone(),
            vocab: f.vocab.ids().to_vec(),
            bags: f.bags.clone(),
        })
        .collect();
    let features_path = dir.join("features.json");
    let json = serde_json::to_string(&fields)
        .map_err(|e| CdnError::Data(format!("cannot serialize features: {e}")))?;
    std::fs::write(&features_path, json).map_err(|e| CdnError::io(&features_path, e))?;

    write_interactions(&dir.join("train.bin"), &data.split.train.interactions)?;
    write_interactions(&dir.join("valid.bin"), &data.split.valid.interactions)?;
    write_interactions(&dir.join("test.bin"), &data.split.test.interactions)?;
    write_interactions(&dir.join("regularizer.bin"), &regularizer.interactions)?;

    let manifest = CacheManifest {
        format_version: CACHE_FORMAT_VERSION,
        source: data.source.clone(),
        config_hash: config_hash.to_string(),
        n_users: catalog.n_users(),
        n_items: catalog.n_items(),
        n_train: data.split.train.len(),
        n_valid: data.split.valid.len(),
        n_test: data.split.test.len(),
        n_regularizer: regularizer.len(),
        imbalance_factor: data.stats.imbalance_factor,
        head_fraction: data.head_fraction,
        n_head: data.stats.n_head(),
        n_tail: data.stats.n_tail(),
        regularizer_cap: data.stats.max_tail_freq()?,
        seed: data.seed,
        fields: catalog
            .gen_fields
            .iter()
            .map(|f| FieldInfo {
                name: f.name.clone(),
                vocab_size: f.vocab.len(),
            })
            .collect(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CdnError::Data(format!("cannot serialize manifest: {e}")))?;
    std::fs::write(&manifest_path, json).map_err(|e| CdnError::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<CacheManifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CdnError::io(&path, e))?;
    let manifest: CacheManifest = serde_json::from_str(&text)
        .map_err(|e| CdnError::Data(format!("bad manifest {path:?}: {e}")))?;
    if manifest.format_version != CACHE_FORMAT_VERSION {
        return Err(CdnError::Data(format!(
            "cache format {} unsupported (expected {CACHE_FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

pub fn read_cache(dir: &Path) -> Result<PreparedDataset> {
    let manifest = read_manifest(dir)?;

    let users = Vocab::from_ids(read_lines(&dir.join("users.txt"))?)?;
    let items = Vocab::from_ids(read_lines(&dir.join("items.txt"))?)?;
    let features_path = dir.join("features.json");
    let text = std::fs::read_to_string(&features_path).map_err(|e| CdnError::io(&features_path, e))?;
    let fields: Vec<FieldJson> = serde_json::from_str(&text)
        .map_err(|e| CdnError::Data(format!("bad features.json: {e}")))?;
    let gen_fields = fields
        .into_iter()
        .map(|f| {
            Ok(FeatureField {
                name: f.name,
                vocab: Vocab::from_ids(f.vocab)?,
                bags: f.bags,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let catalog = Arc::new(Catalog {
        users,
        items,
        gen_fields,
    });
    let train = InteractionLog::new(Arc::clone(&catalog), read_interactions(&dir.join("train.bin"))?)?;
    let valid = InteractionLog::new(Arc::clone(&catalog), read_interactions(&dir.join("valid.bin"))?)?;
    let test = InteractionLog::new(Arc::clone(&catalog), read_interactions(&dir.join("test.bin"))?)?;
    let regularizer = InteractionLog::new(catalog, read_interactions(&dir.join("regularizer.bin"))?)?;

    let stats = split_head_tail(&build_stats(&train)?, manifest.head_fraction)?;

    Ok(PreparedDataset {
        split: SplitLog {
            train,
            valid,
            test,
            regularizer: Some(regularizer),
        },
        stats,
        head_fraction: manifest.head_fraction,
        seed: manifest.seed,
        source: manifest.source,
    })
}
