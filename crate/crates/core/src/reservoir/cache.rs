//! On-disk feature cache keyed by a hash of whatever produced the features.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Overrides the cache directory chosen by the caller.
pub const CACHE_DIR_ENV: &str = "SPINRC_CACHE_DIR";

/// Hex SHA-256 over length-prefixed parts, so `["ab", "c"]` and
/// `["a", "bc"]` hash differently.
pub fn cache_key<I, P>(parts: I) -> String
where
    I: IntoIterator<Item = P>,
    P: AsRef<[u8]>,
{
    let mut h = Sha256::new();
    for p in parts {
        let p = p.as_ref();
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex(&h.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Uses `$SPINRC_CACHE_DIR` when set, else `fallback`.
    pub fn from_env(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.fm"))
    }

    /// A missing or unreadable entry is a miss, not an error.
    pub fn load(&self, key: &str) -> Option<FeatureMatrix> {
        let bytes = fs::read(self.path(key)).ok()?;
        FeatureMatrix::from_bytes(&bytes).ok()
    }

    pub fn store(&self, key: &str, features: &FeatureMatrix) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(key);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, features.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}
