//! Content-addressed fixture store.
//!
//! One JSON file per entry, named by the SHA-256 of the canonical request.
//! The response body is base64 inside the envelope; the request is kept
//! alongside in plain JSON so fixture diffs stay readable.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ProviderError, ProviderKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub provider_kind: ProviderKind,
    pub recorded_at: String,
    #[serde(default)]
    pub request: serde_json::Value,
    #[serde(rename = "response_b64", with = "b64")]
    pub response: Vec<u8>,
}

mod b64 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&B64.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        B64.decode(text).map_err(serde::de::Error::custom)
    }
}

impl CacheEntry {
    pub fn new(kind: ProviderKind, request: serde_json::Value, response: Vec<u8>) -> Self {
        Self {
            key: request_key(kind, &request),
            provider_kind: kind,
            recorded_at: chrono::Utc::now().to_rfc3339(),
            request,
            response,
        }
    }
}

/// Hex SHA-256 over the provider kind and the request's canonical JSON.
///
/// `serde_json::Value` objects keep keys sorted, so two requests with equal
/// fields hash the same regardless of how they were assembled.
pub fn request_key(kind: ProviderKind, request: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(request).expect("json values always serialize");
    let mut hasher = Sha256::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

/// Directory of fixture files. Reads are lock-free; writes are serialized.
#[derive(Debug)]
pub struct FixtureCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl FixtureCache {
    /// Opens (creating if needed) a fixture directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ProviderError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    /// Opens an existing directory without creating it.
    pub fn open_existing(dir: impl Into<PathBuf>) -> Result<Self, ProviderError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(ProviderError::Config(format!(
                "fixture directory {} does not exist",
                dir.display()
            )));
        }
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.path_for(key).is_file()
    }

    /// Stores an entry. A second put under an existing key leaves the first
    /// entry in place.
    pub fn put(&self, entry: &CacheEntry) -> Result<(), ProviderError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.path_for(&entry.key);
        if path.exists() {
            return Ok(());
        }
        let body = serde_json::to_vec_pretty(entry).map_err(io::Error::other)?;
        let tmp = self.dir.join(format!(".{}.tmp", entry.key));
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn get(&self, kind: ProviderKind, key: &str) -> Result<CacheEntry, ProviderError> {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(ProviderError::CacheMiss {
                    kind,
                    key: key.to_string(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes).map_err(|e| {
            ProviderError::Io(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}: {e}", path.display()),
            ))
        })
    }

    /// All entries, sorted by key.
    pub fn entries(&self) -> Result<Vec<CacheEntry>, ProviderError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && !p
                        .file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with('.'))
            })
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| {
                let bytes = fs::read(&p)?;
                serde_json::from_slice(&bytes).map_err(|e| {
                    ProviderError::Io(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}: {e}", p.display()),
                    ))
                })
            })
            .collect()
    }
}
