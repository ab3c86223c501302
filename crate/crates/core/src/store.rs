//! Memoization of expensive integrals behind a pluggable store, plus the
//! evaluation settings threaded through every numerical routine.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use num_complex::Complex64 as C64;
use parking_lot::RwLock;
use sha2::{Digest, Sha256};

/// 128-bit content key.
pub type Key = [u8; 16];

/// Key-value store for integral results. Implementations must tolerate
/// concurrent readers and writers; a value stored under a key is a pure
/// function of that key, so last-write-wins is harmless.
pub trait IntegralStore: Send + Sync {
    fn get(&self, key: &Key) -> Option<Vec<f64>>;
    fn put(&self, key: Key, value: Vec<f64>);
}

#[derive(Default)]
pub struct MemoryStore {
    map: RwLock<HashMap<Key, Vec<f64>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.read().is_empty()
    }
}

impl IntegralStore for MemoryStore {
    fn get(&self, key: &Key) -> Option<Vec<f64>> {
        self.map.read().get(key).cloned()
    }

    fn put(&self, key: Key, value: Vec<f64>) {
        self.map.write().insert(key, value);
    }
}

/// Incremental builder for content keys.
#[derive(Clone)]
pub struct KeyBuilder(Sha256);

impl KeyBuilder {
    pub fn new(op: &str) -> Self {
        let mut h = Sha256::new();
        h.update((op.len() as u64).to_le_bytes());
        h.update(op.as_bytes());
        Self(h)
    }

    pub fn u64(mut self, x: u64) -> Self {
        self.0.update(x.to_le_bytes());
        self
    }

    pub fn f64(mut self, x: f64) -> Self {
        // fold -0.0 into 0.0 so equal inputs hash equally
        let x = if x == 0.0 { 0.0 } else { x };
        self.0.update(x.to_bits().to_le_bytes());
        self
    }

    pub fn c64(self, z: C64) -> Self {
        self.f64(z.re).f64(z.im)
    }

    pub fn bytes(mut self, b: &[u8]) -> Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn finish(self) -> Key {
        let digest = self.0.finalize();
        let mut k = [0u8; 16];
        k.copy_from_slice(&digest[..16]);
        k
    }
}

/// Numerical settings and the integral store shared by a computation.
#[derive(Clone)]
pub struct Context {
    pub store: Option<Arc<dyn IntegralStore>>,
    /// Relative tolerance for adaptive one-dimensional quadrature.
    pub rel_tol: f64,
    /// Cap on the total Wick degree Σ r_i.
    pub wick_cap: usize,
    /// Seed for the quasi-random shifts.
    pub seed: u64,
    /// Points per quasi-random estimate.
    pub qmc_points: usize,
    /// Gauss–Legendre nodes per edge for tensor and transfer-matrix rules.
    pub gl_nodes: usize,
    /// In-process cache of sampled kernels; never persisted.
    pub kernels: Arc<RwLock<HashMap<Key, Arc<DMatrix<C64>>>>>,
    /// In-process cache of intermediate values too numerous to persist.
    pub transient: Arc<RwLock<HashMap<Key, Vec<f64>>>>,
}

/// Entries kept in each in-process cache before it is flushed.
const TRANSIENT_CAP: usize = 1 << 13;

impl Default for Context {
    fn default() -> Self {
        Self {
            store: Some(Arc::new(MemoryStore::new())),
            rel_tol: 1e-10,
            wick_cap: 16,
            seed: 0x5eed,
            qmc_points: 1 << 16,
            gl_nodes: 64,
            kernels: Arc::default(),
            transient: Arc::default(),
        }
    }
}

impl Context {
    /// Context without memoization.
    pub fn uncached() -> Self {
        Self { store: None, ..Self::default() }
    }

    pub fn with_store(store: Arc<dyn IntegralStore>) -> Self {
        Self { store: Some(store), ..Self::default() }
    }

    /// Looks `key` up, computing and storing on a miss.
    pub fn memo<E>(&self, key: Key, f: impl FnOnce() -> Result<Vec<f64>, E>) -> Result<Vec<f64>, E> {
        if let Some(store) = &self.store {
            if let Some(v) = store.get(&key) {
                return Ok(v);
            }
            let v = f()?;
            store.put(key, v.clone());
            Ok(v)
        } else {
            f()
        }
    }

    pub fn kernel(&self, key: Key, f: impl FnOnce() -> DMatrix<C64>) -> Arc<DMatrix<C64>> {
        if let Some(k) = self.kernels.read().get(&key) {
            return k.clone();
        }
        let k = Arc::new(f());
        let mut map = self.kernels.write();
        if map.len() >= TRANSIENT_CAP {
            map.clear();
        }
        map.insert(key, k.clone());
        k
    }

    /// Like [`Context::memo`] but in memory only and independent of the store.
    pub fn transient(&self, key: Key, f: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
        if let Some(v) = self.transient.read().get(&key) {
            return v.clone();
        }
        let v = f();
        let mut map = self.transient.write();
        if map.len() >= 64 * TRANSIENT_CAP {
            map.clear();
        }
        map.insert(key, v.clone());
        v
    }

    /// Settings folded into every cache key so that results computed under
    /// different tolerances never alias.
    pub fn salt(&self, kb: KeyBuilder) -> KeyBuilder {
        kb.f64(self.rel_tol).u64(self.wick_cap as u64).u64(self.seed).u64(self.qmc_points as u64).u64(self.gl_nodes as u64)
    }
}
