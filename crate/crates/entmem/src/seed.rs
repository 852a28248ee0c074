//! Deterministic stream splitting.
//!
//! Every stochastic stage derives its own generator from the master seed and
//! a small integer path (stage tag, point index, repetition index). Streams
//! are therefore independent of evaluation order, and adding points to a
//! scan never perturbs existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; full avalanche on 64 bits.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of stream indices into the master seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = mix(master ^ GAMMA);
    for &p in path {
        state = mix(state.wrapping_add(GAMMA).wrapping_add(p.wrapping_mul(0xD134_2543_DE82_EF95)));
    }
    state
}

/// Generator for the stream addressed by `path` under `master`.
pub fn rng_from_path(master: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn distinct_paths_give_distinct_streams() {
        let a = derive_seed(7, &[1, 0]);
        let b = derive_seed(7, &[1, 1]);
        let c = derive_seed(7, &[2, 0]);
        let d = derive_seed(8, &[1, 0]);
        let all = [a, b, c, d];
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn derivation_is_stable() {
        // frozen value: guards the on-disk determinism contract
        assert_eq!(derive_seed(0, &[]), mix(GAMMA));
        let s1 = derive_seed(42, &[3, 5]);
        let s2 = derive_seed(42, &[3, 5]);
        assert_eq!(s1, s2);
    }

    #[test]
    fn rng_reproduces() {
        let mut r1 = rng_from_path(1234, &[9]);
        let mut r2 = rng_from_path(1234, &[9]);
        for _ in 0..8 {
            assert_eq!(r1.next_u64(), r2.next_u64());
        }
    }

    #[test]
    fn path_is_not_flattened() {
        // [1, 2] and [2, 1] must address different streams
        assert_ne!(derive_seed(0, &[1, 2]), derive_seed(0, &[2, 1]));
        // nor can a longer path collide with its prefix
        assert_ne!(derive_seed(0, &[1]), derive_seed(0, &[1, 0]));
    }
}
