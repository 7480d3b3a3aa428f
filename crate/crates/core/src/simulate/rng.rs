use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of replicate `index`, drawn from stream `index` of the base generator.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_seeds_are_stable_and_distinct() {
        let a: Vec<u64> = (0..100).map(|i| replicate_seed(42, i)).collect();
        let b: Vec<u64> = (0..100).map(|i| replicate_seed(42, i)).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(replicate_seed(1, 0), replicate_seed(2, 0));
    }
}
