//! Content-addressed stage cache and the run manifest.
//!
//! Every artifact lives under `<cache>/<stage>/<key>.<ext>` where the key
//! is a 16-hex-digit hash over the stage recipe (inputs' hashes plus
//! parameters). Identical inputs re-use artifacts; changing one input mesh
//! invalidates only the artifacts derived from it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// 16-hex-digit content hash of raw bytes.
pub fn hash_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex16(&digest)
}

/// 16-hex-digit hash of a recipe (stage name, input hashes, parameters).
pub fn hash_parts(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p.as_bytes());
    }
    hex16(&hasher.finalize())
}

/// Per-mesh seed derived from the master seed, mesh id and draw index, so
/// adding or removing a mesh never perturbs the others' samples.
pub fn derive_seed(master: u64, mesh_id: &str, draw: u32) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(mesh_id.as_bytes());
    hasher.update(draw.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn hex16(digest: &[u8]) -> String {
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Handle to the cache directory with per-stage hit/miss accounting.
pub struct Cache {
    root: PathBuf,
    pub hits: BTreeMap<String, usize>,
    pub misses: BTreeMap<String, usize>,
    pub timings: BTreeMap<String, f64>,
    pub artifacts: BTreeMap<String, Vec<String>>,
}

impl Cache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)
            .with_context(|| format!("creating cache directory {}", root.display()))?;
        Ok(Cache {
            root,
            hits: BTreeMap::new(),
            misses: BTreeMap::new(),
            timings: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn path(&self, stage: &str, key: &str, ext: &str) -> PathBuf {
        self.root.join(stage).join(format!("{key}.{ext}"))
    }

    fn note(&mut self, stage: &str, key: &str, hit: bool) {
        let bucket = if hit { &mut self.hits } else { &mut self.misses };
        *bucket.entry(stage.to_string()).or_insert(0) += 1;
        self.artifacts
            .entry(stage.to_string())
            .or_default()
            .push(key.to_string());
    }

    /// Load the artifact if present, otherwise compute, store and return
    /// its serialized bytes.
    pub fn bytes_or<F>(&mut self, stage: &str, key: &str, ext: &str, compute: F) -> Result<Vec<u8>>
    where
        F: FnOnce() -> Result<Vec<u8>>,
    {
        let path = self.path(stage, key, ext);
        let started = Instant::now();
        let result = if path.exists() {
            self.note(stage, key, true);
            std::fs::read(&path).with_context(|| format!("reading cached {}", path.display()))?
        } else {
            let bytes = compute()?;
            std::fs::create_dir_all(path.parent().unwrap())?;
            std::fs::write(&path, &bytes)
                .with_context(|| format!("writing cache entry {}", path.display()))?;
            self.note(stage, key, false);
            bytes
        };
        *self.timings.entry(stage.to_string()).or_insert(0.0) +=
            started.elapsed().as_secs_f64() * 1e3;
        Ok(result)
    }

    /// Path of an artifact that must already exist; names the stage to run
    /// when it does not.
    pub fn require(&self, stage: &str, key: &str, ext: &str, produced_by: &str) -> Result<PathBuf> {
        let path = self.path(stage, key, ext);
        if !path.exists() {
            anyhow::bail!(
                "missing {stage} artifact {key}; run `shaperet {produced_by}` with this config first"
            );
        }
        Ok(path)
    }

    /// Total cache misses across stages (0 means a fully cache-hit run).
    pub fn total_misses(&self) -> usize {
        self.misses.values().sum()
    }
}

/// Snapshot of one pipeline run: configuration, artifact hashes, timings.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    /// Stage name -> sorted artifact keys.
    pub artifacts: BTreeMap<String, Vec<String>>,
    pub stage_timings_ms: BTreeMap<String, f64>,
    pub cache_hits: BTreeMap<String, usize>,
    pub cache_misses: BTreeMap<String, usize>,
}

impl RunManifest {
    pub fn new(config: BTreeMap<String, String>, cache: &Cache) -> Self {
        let mut artifacts = cache.artifacts.clone();
        for keys in artifacts.values_mut() {
            keys.sort();
            keys.dedup();
        }
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            artifacts,
            stage_timings_ms: cache.timings.clone(),
            cache_hits: cache.hits.clone(),
            cache_misses: cache.misses.clone(),
        }
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&json)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sixteen_hex_digits() {
        for key in [hash_bytes(b"abc"), hash_parts(&["a", "b"])] {
            assert_eq!(key.len(), 16);
            assert!(key.chars().all(|c| c.is_ascii_hexdigit()));
        }
        assert_ne!(hash_parts(&["ab", "c"]), hash_parts(&["a", "bc"]));
    }

    #[test]
    fn derived_seeds_differ_by_mesh_and_draw() {
        let a = derive_seed(7, "mesh1", 0);
        assert_eq!(a, derive_seed(7, "mesh1", 0));
        assert_ne!(a, derive_seed(7, "mesh2", 0));
        assert_ne!(a, derive_seed(7, "mesh1", 1));
        assert_ne!(a, derive_seed(8, "mesh1", 0));
    }

    #[test]
    fn bytes_or_hits_on_second_read() {
        let dir = tempfile::tempdir().unwrap();
        let mut cache = Cache::open(dir.path()).unwrap();
        let key = hash_parts(&["stage-test", "x"]);
        let a = cache
            .bytes_or("geometry", &key, "bin", || Ok(vec![1, 2, 3]))
            .unwrap();
        assert_eq!(a, vec![1, 2, 3]);
        assert_eq!(cache.total_misses(), 1);
        let b = cache
            .bytes_or("geometry", &key, "bin", || panic!("must not recompute"))
            .unwrap();
        assert_eq!(b, vec![1, 2, 3]);
        assert_eq!(cache.hits["geometry"], 1);
    }

    #[test]
    fn require_names_the_prerequisite() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let err = cache
            .require("reduction", "deadbeef00000000", "bin", "reduce")
            .unwrap_err();
        assert!(err.to_string().contains("shaperet reduce"), "{err}");
    }
}
