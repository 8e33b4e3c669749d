//! Content-addressed cache of raw endpoint responses.
//!
//! Keys are the SHA-256 of the endpoint URL plus the canonical JSON request
//! body, so identical requests replay from disk and never touch the
//! network. Bodies are stored verbatim under `objects/<xy>/<key>.json`; a
//! `manifest.jsonl` records one row per stored entry for inspection.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::BackendError;

use super::BackendResult;

#[derive(Serialize)]
struct ManifestRow<'a> {
    key: &'a str,
    kind: &'a str,
    request_id: &'a str,
    bytes: usize,
}

pub struct ResponseCache {
    root: PathBuf,
    // fs writes are atomic via rename; this only serializes manifest appends
    manifest_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn open(root: impl Into<PathBuf>) -> BackendResult<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("objects"))
            .map_err(|e| BackendError::Cache(format!("create {}: {e}", root.display())))?;
        Ok(ResponseCache { root, manifest_lock: Mutex::new(()) })
    }

    /// Cache key for a request: endpoint plus canonical body. `Value` maps
    /// serialize with sorted keys, which makes the serialization canonical.
    pub fn key(endpoint: &str, body: &Value) -> String {
        let mut hasher = Sha256::new();
        hasher.update(endpoint.as_bytes());
        hasher.update([0x1f]);
        hasher.update(body.to_string().as_bytes());
        hex::encode(hasher.finalize())
    }

    fn object_path(&self, key: &str) -> PathBuf {
        self.root.join("objects").join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> BackendResult<Option<String>> {
        let path = self.object_path(key);
        match fs::read_to_string(&path) {
            Ok(body) => Ok(Some(body)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(BackendError::Cache(format!("read {}: {e}", path.display()))),
        }
    }

    /// Store a response body. Concurrent writers of the same key are fine:
    /// both write identical content-addressed files.
    pub fn put(&self, key: &str, kind: &str, request_id: &str, body: &str) -> BackendResult<()> {
        let path = self.object_path(key);
        let dir = path.parent().expect("object path has a parent");
        fs::create_dir_all(dir)
            .map_err(|e| BackendError::Cache(format!("create {}: {e}", dir.display())))?;

        let already_present = path.exists();
        if !already_present {
            let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
            fs::write(&tmp, body)
                .map_err(|e| BackendError::Cache(format!("write {}: {e}", tmp.display())))?;
            fs::rename(&tmp, &path)
                .map_err(|e| BackendError::Cache(format!("rename {}: {e}", path.display())))?;

            let row = ManifestRow { key, kind, request_id, bytes: body.len() };
            let line = serde_json::to_string(&row)
                .map_err(|e| BackendError::Cache(format!("manifest row: {e}")))?;
            let manifest = self.root.join("manifest.jsonl");
            let _guard = self.manifest_lock.lock().expect("manifest lock poisoned");
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&manifest)
                .map_err(|e| BackendError::Cache(format!("open {}: {e}", manifest.display())))?;
            writeln!(file, "{line}")
                .map_err(|e| BackendError::Cache(format!("append {}: {e}", manifest.display())))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_depends_on_endpoint_and_body() {
        let body = json!({"prompt": "hi", "n": 1});
        let a = ResponseCache::key("http://x/v1", &body);
        let b = ResponseCache::key("http://y/v1", &body);
        let c = ResponseCache::key("http://x/v1", &json!({"prompt": "hi", "n": 2}));
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, ResponseCache::key("http://x/v1", &body));
        // key order in the JSON object must not matter
        let shuffled = json!({"n": 1, "prompt": "hi"});
        assert_eq!(a, ResponseCache::key("http://x/v1", &shuffled));
    }

    #[test]
    fn put_then_get_round_trips_and_miss_is_none() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = ResponseCache::key("http://x", &json!({"q": 1}));
        assert_eq!(cache.get(&key).unwrap(), None);
        cache.put(&key, "completion", "r1", r#"{"choices":[]}"#).unwrap();
        assert_eq!(cache.get(&key).unwrap().as_deref(), Some(r#"{"choices":[]}"#));
        // duplicate put keeps the original and appends no second row
        cache.put(&key, "completion", "r2", r#"{"choices":[1]}"#).unwrap();
        assert_eq!(cache.get(&key).unwrap().as_deref(), Some(r#"{"choices":[]}"#));
        let manifest = std::fs::read_to_string(dir.path().join("manifest.jsonl")).unwrap();
        assert_eq!(manifest.lines().count(), 1);
        assert!(manifest.contains("\"request_id\":\"r1\""));
    }

    #[test]
    fn concurrent_puts_are_safe() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        std::thread::scope(|scope| {
            for i in 0..8 {
                let cache = &cache;
                scope.spawn(move || {
                    let key = ResponseCache::key("e", &json!({"i": i % 4}));
                    cache.put(&key, "completion", "r", &format!("{{\"i\":{}}}", i % 4)).unwrap();
                });
            }
        });
        let manifest = std::fs::read_to_string(dir.path().join("manifest.jsonl")).unwrap();
        // 4 distinct keys; racing writers may at worst duplicate a row
        assert!(manifest.lines().count() >= 4);
        for i in 0..4 {
            let key = ResponseCache::key("e", &json!({"i": i}));
            assert_eq!(cache.get(&key).unwrap().unwrap(), format!("{{\"i\":{i}}}"));
        }
    }
}
