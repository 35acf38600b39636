//! Seeding, thread-pool, and small numeric helpers shared across modules.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};
use std::sync::OnceLock;

/// Environment variable capping worker parallelism.
pub const THREADS_ENV: &str = "JGPP_THREADS";

/// Derive an independent, reproducible RNG from a global seed, a stream
/// label, and an index. Distinct (seed, label, index) triples yield
/// statistically independent streams, so per-instance work can run in any
/// order (or in parallel) without perturbing other draws.
pub fn derive_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0xff]);
    hasher.update(label.as_bytes());
    hasher.update([0xfe]);
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Worker-thread cap: `JGPP_THREADS` if set and positive, otherwise the
/// machine's available parallelism.
pub fn worker_threads() -> usize {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Shared rayon pool honoring [`worker_threads`]. All parallel sections in
/// this crate run inside this pool; every reduction uses a fixed order, so
/// results do not depend on the thread count.
pub fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(worker_threads())
            .build()
            .expect("failed to build worker pool")
    })
}

/// Short hex digest of arbitrary bytes, used to fingerprint configs in
/// manifests.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Sum `values` in index order. Helper for parallel maps that must reduce
/// deterministically.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}
