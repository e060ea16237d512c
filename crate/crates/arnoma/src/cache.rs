//! On-disk cache of inverse JM-cell area estimates.
//!
//! The normalised estimate depends on the geometry only through
//! `lambda_b L^2`, so entries are keyed by that product (to nine significant
//! digits) together with the sampling effort and seed. Values are stored as
//! TOML floats, which round-trip exactly.

use std::path::{Path, PathBuf};

use arnoma_core::distributions::{InverseAreaEstimate, JmAreaSettings};
use serde::{Deserialize, Serialize};

/// One cached estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub lambda_l2_key: String,
    pub n_cells: usize,
    pub points_per_cell: usize,
    pub seed: u64,
    pub lambda_l2: f64,
    pub normalized: f64,
    pub normalized_std_error: f64,
    pub degenerate_resamples: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    #[serde(default)]
    entry: Vec<CacheEntry>,
}

/// Errors reading or writing the cache.
#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cache {path}: malformed: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("cache {path}: {source}")]
    Serialize {
        path: PathBuf,
        source: toml::ser::Error,
    },
}

/// Cache key for a value of `lambda_b L^2`.
pub fn key(lambda_l2: f64) -> String {
    format!("{lambda_l2:.8e}")
}

/// The cache file at a fixed path. Missing files behave as empty caches.
pub struct JmAreaCache {
    path: PathBuf,
    file: CacheFile,
}

impl JmAreaCache {
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let file = match std::fs::read_to_string(path) {
            Ok(text) => toml::from_str(&text).map_err(|source| CacheError::Parse {
                path: path.to_path_buf(),
                source,
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => CacheFile::default(),
            Err(source) => {
                return Err(CacheError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        Ok(JmAreaCache {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.file.entry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.file.entry.is_empty()
    }

    /// Looks up an estimate and rescales it to `lambda_b`.
    pub fn get(
        &self,
        lambda_b: f64,
        lambda_l2: f64,
        s: &JmAreaSettings,
    ) -> Option<InverseAreaEstimate> {
        let k = key(lambda_l2);
        self.file
            .entry
            .iter()
            .find(|e| {
                e.lambda_l2_key == k
                    && e.n_cells == s.n_cells
                    && e.points_per_cell == s.points_per_cell
                    && e.seed == s.seed
            })
            .map(|e| InverseAreaEstimate {
                lambda_l2: e.lambda_l2,
                normalized: e.normalized,
                normalized_std_error: e.normalized_std_error,
                lambda_b,
                n_samples: e.n_cells,
                degenerate_resamples: e.degenerate_resamples,
                seed: e.seed,
                widened_ci: e.n_cells < arnoma_core::distributions::JM_AREA_TARGET_CELLS,
            })
    }

    /// Adds (or replaces) an entry and rewrites the file.
    pub fn insert(
        &mut self,
        est: &InverseAreaEstimate,
        s: &JmAreaSettings,
    ) -> Result<(), CacheError> {
        let entry = CacheEntry {
            lambda_l2_key: key(est.lambda_l2),
            n_cells: s.n_cells,
            points_per_cell: s.points_per_cell,
            seed: s.seed,
            lambda_l2: est.lambda_l2,
            normalized: est.normalized,
            normalized_std_error: est.normalized_std_error,
            degenerate_resamples: est.degenerate_resamples,
        };
        self.file.entry.retain(|e| {
            !(e.lambda_l2_key == entry.lambda_l2_key
                && e.n_cells == entry.n_cells
                && e.points_per_cell == entry.points_per_cell
                && e.seed == entry.seed)
        });
        self.file.entry.push(entry);
        let text = toml::to_string(&self.file).map_err(|source| CacheError::Serialize {
            path: self.path.clone(),
            source,
        })?;
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| CacheError::Io {
                path: self.path.clone(),
                source,
            })?;
        }
        std::fs::write(&self.path, text).map_err(|source| CacheError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> InverseAreaEstimate {
        InverseAreaEstimate {
            lambda_l2: 0.091_629_073_187_415_5,
            normalized: 4.200_712_345_678_9,
            normalized_std_error: 0.006_1,
            lambda_b: 1e-4,
            n_samples: 10_000,
            degenerate_resamples: 0,
            seed: 7,
            widened_ci: false,
        }
    }

    #[test]
    fn values_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        let s = JmAreaSettings {
            n_cells: 10_000,
            points_per_cell: 100_000,
            seed: 7,
        };
        let mut c = JmAreaCache::open(&path).unwrap();
        assert!(c.is_empty());
        c.insert(&sample(), &s).unwrap();
        c.insert(&sample(), &s).unwrap();
        let c = JmAreaCache::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        let got = c.get(2e-4, sample().lambda_l2, &s).unwrap();
        assert_eq!(got.normalized.to_bits(), sample().normalized.to_bits());
        assert_eq!(got.lambda_b, 2e-4);
        assert!(c
            .get(1e-4, sample().lambda_l2, &JmAreaSettings { seed: 8, ..s })
            .is_none());
        assert!(c.get(1e-4, 0.2, &s).is_none());
    }
}
