//! Append-only on-disk integral store.
//!
//! File layout: the magic line `NLRCACHE1\n`, then records
//! `key[16] | len: u32 LE | len × f64 LE | check[8]`, where `check` is the
//! first 8 bytes of SHA-256 over the preceding fields of the record.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use nlrecon::store::{IntegralStore, Key};
use sha2::{Digest, Sha256};

pub const MAGIC: &[u8] = b"NLRCACHE1\n";
pub const FILE_NAME: &str = "cache.nlc";

pub struct FileStore {
    path: PathBuf,
    map: RwLock<HashMap<Key, Vec<f64>>>,
    file: Mutex<File>,
}

fn checksum(body: &[u8]) -> [u8; 8] {
    let h = Sha256::digest(body);
    let mut c = [0u8; 8];
    c.copy_from_slice(&h[..8]);
    c
}

pub fn encode(key: &Key, value: &[f64]) -> Vec<u8> {
    let mut rec = Vec::with_capacity(16 + 4 + 8 * value.len() + 8);
    rec.extend_from_slice(key);
    rec.extend_from_slice(&(value.len() as u32).to_le_bytes());
    for x in value {
        rec.extend_from_slice(&x.to_le_bytes());
    }
    let c = checksum(&rec);
    rec.extend_from_slice(&c);
    rec
}

/// Parses a whole cache file; any defect rejects the file.
pub fn decode(bytes: &[u8]) -> Result<HashMap<Key, Vec<f64>>, String> {
    let mut rest = bytes.strip_prefix(MAGIC).ok_or("missing or unknown header")?;
    let mut map = HashMap::new();
    let mut offset = MAGIC.len();
    while !rest.is_empty() {
        if rest.len() < 20 {
            return Err(format!("truncated record at byte {offset}"));
        }
        let len = u32::from_le_bytes(rest[16..20].try_into().unwrap()) as usize;
        let total = 20 + 8 * len + 8;
        if rest.len() < total {
            return Err(format!("truncated record at byte {offset}"));
        }
        let (body, check) = rest[..total].split_at(total - 8);
        if checksum(body) != check {
            return Err(format!("checksum mismatch at byte {offset}"));
        }
        let key: Key = body[..16].try_into().unwrap();
        let value = body[20..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        map.insert(key, value);
        rest = &rest[total..];
        offset += total;
    }
    Ok(map)
}

impl FileStore {
    /// Opens or creates the cache in `dir`. A corrupt file is reported
    /// through `warn` and replaced by an empty one.
    pub fn open(dir: &Path, mut warn: impl FnMut(&str)) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(FILE_NAME);
        let mut map = HashMap::new();
        let mut fresh = true;
        if path.exists() {
            let mut bytes = Vec::new();
            File::open(&path)?.read_to_end(&mut bytes)?;
            match decode(&bytes) {
                Ok(m) => {
                    map = m;
                    fresh = false;
                }
                Err(e) => warn(&format!("CACHE_CORRUPT: {}: {e}; cache ignored", path.display())),
            }
        }
        let file = if fresh {
            let mut f = File::create(&path)?;
            f.write_all(MAGIC)?;
            f
        } else {
            OpenOptions::new().append(true).open(&path)?
        };
        Ok(Self { path, map: RwLock::new(map), file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl IntegralStore for FileStore {
    fn get(&self, key: &Key) -> Option<Vec<f64>> {
        self.map.read().unwrap().get(key).cloned()
    }

    fn put(&self, key: Key, value: Vec<f64>) {
        let rec = encode(&key, &value);
        // a failed append only loses the memo, never a value
        let _ = self.file.lock().unwrap().write_all(&rec);
        self.map.write().unwrap().insert(key, value);
    }
}
