//! Deterministic RNG stream derivation.
//!
//! Every random decision in a run draws from its own stream, keyed by the
//! master seed plus a purpose tag and, where relevant, a client id and round
//! number. Streams are independent ChaCha8 generators, so adding draws to one
//! purpose (say, feature generation) never shifts another (say, probe
//! sampling). This is what lets search-only ensembles skip training while
//! reproducing exactly the bounds trajectory of a full run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is for. The discriminants are part of the
/// reproducibility contract: reordering them changes every seeded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    /// Class means and feature noise for the synthetic dataset.
    Dataset,
    /// Held-out evaluation samples.
    TestSet,
    /// Dirichlet proportions for the per-class partition.
    Partition,
    /// Per-client hardware tier draws.
    Profiles,
    /// Which clients are shielded in a given round.
    Roles { round: usize },
    /// A searcher's probe draw.
    Probe { client: usize, round: usize },
    /// A client's epoch shuffle.
    Shuffle { client: usize, round: usize },
    /// Master seed for one run of a Monte Carlo ensemble.
    EnsembleRun { group: u64, index: u64 },
}

impl StreamId {
    fn words(self) -> [u64; 3] {
        match self {
            StreamId::Dataset => [1, 0, 0],
            StreamId::TestSet => [2, 0, 0],
            StreamId::Partition => [3, 0, 0],
            StreamId::Profiles => [4, 0, 0],
            StreamId::Roles { round } => [5, round as u64, 0],
            StreamId::Probe { client, round } => [6, client as u64, round as u64],
            StreamId::Shuffle { client, round } => [7, client as u64, round as u64],
            StreamId::EnsembleRun { group, index } => [8, group, index],
        }
    }
}

/// SplitMix64 step: a strong 64-bit mix with good avalanche behavior.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the ChaCha8 generator for one (master seed, purpose) pair.
///
/// The key words are folded through SplitMix64 into a full 256-bit seed, so
/// related keys (consecutive rounds, neighboring client ids) yield unrelated
/// streams.
pub fn stream(master_seed: u64, id: StreamId) -> ChaCha8Rng {
    let words = id.words();
    let mut state = master_seed ^ 0x6a09_e667_f3bc_c908;
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        state ^= splitmix64(&mut state) ^ words[i % words.len()].rotate_left(i as u32);
        let word = splitmix64(&mut state);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Collapses an ensemble key to a fresh master seed for a derived run.
pub fn derive_run_seed(master_seed: u64, group: u64, index: u64) -> u64 {
    let mut state = master_seed
        ^ group.wrapping_mul(0xa076_1d64_78bd_642f)
        ^ index.wrapping_mul(0xe703_7ed1_a0b4_28db);
    splitmix64(&mut state)
}
