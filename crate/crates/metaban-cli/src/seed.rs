//! Deterministic seed derivation.
//!
//! Per-run streams come from `base_seed XOR fnv1a(policy, run_index)`, so
//! runs never share a stream and the mapping is stable across platforms
//! (unlike the std hasher). Component streams inside a run are derived by
//! further keyed hashing.

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Seed of one (policy, run) stream.
pub fn run_seed(base: u64, policy: &str, run_index: usize) -> u64 {
    let bytes = policy
        .as_bytes()
        .iter()
        .copied()
        .chain((run_index as u64).to_le_bytes());
    base ^ fnv1a(bytes)
}

/// Environment stream for a run index: shared by every policy so that all
/// policies of a run face the same rounds.
pub fn env_seed(base: u64, run_index: usize) -> u64 {
    let bytes = b"environment"
        .iter()
        .copied()
        .chain((run_index as u64).to_le_bytes());
    base ^ fnv1a(bytes)
}

/// A named component stream inside a run (network init, policy rng, ...).
pub fn component_seed(run: u64, component: &str) -> u64 {
    run ^ fnv1a(component.as_bytes().iter().copied())
}
