use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eegaug::atomic_write;
use eegaug::evalx::{CellKey, CellStore};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct CellFile {
    key: String,
    accuracies: Vec<f64>,
}

/// Finished cells as one JSON file each under `dir`. The directory name
/// is a hash of everything a cell result depends on, so a changed config
/// never reads stale cells.
pub struct DiskStore {
    dir: PathBuf,
    fresh: bool,
}

impl DiskStore {
    pub fn new(dir: PathBuf, fresh: bool) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, fresh })
    }

    fn path(&self, key: &CellKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.id()))
    }
}

impl CellStore for DiskStore {
    fn load(&self, key: &CellKey) -> Option<Vec<f64>> {
        if self.fresh {
            return None;
        }
        let bytes = fs::read(self.path(key)).ok()?;
        match serde_json::from_slice::<CellFile>(&bytes) {
            Ok(c) if c.key == key.id() => {
                log::info!("cached cell {}", c.key);
                Some(c.accuracies)
            }
            _ => {
                log::warn!("ignoring unreadable cache file for {}", key.id());
                None
            }
        }
    }

    fn save(&self, key: &CellKey, accuracies: &[f64]) {
        let cell = CellFile {
            key: key.id(),
            accuracies: accuracies.to_vec(),
        };
        let bytes = serde_json::to_vec_pretty(&cell).expect("cell serializes");
        if let Err(e) = atomic_write(&self.path(key), &bytes) {
            log::warn!("could not cache cell {}: {e}", key.id());
        }
    }
}
