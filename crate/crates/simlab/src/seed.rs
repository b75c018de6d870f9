//! Seed derivation for replication streams.
//!
//! Every replication owns a private generator whose seed depends only on
//! (master_seed, experiment, n, replication). The mixing below is part of
//! the output-stability contract: records.csv must not change across
//! versions or thread counts for a fixed configuration.

use evtlab_core::rng::splitmix64;

/// Counter-based hash of the (master, experiment, n, replication) tuple via
/// chained splitmix64 absorption. Distinct tuples give distinct seeds with
/// overwhelming probability.
pub fn derive_seed(master: u64, experiment_id: u64, n: u64, replication: u64) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for word in [experiment_id, n, replication] {
        state = out ^ word;
        out = splitmix64(&mut state);
    }
    out
}
