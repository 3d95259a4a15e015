use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded random stream.
///
/// Streams are single-owner. Parallel work derives a child per task with
/// [`RandomStream::child`]; the child depends only on the parent's seed and
/// the index, never on how much of the parent has been consumed.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, index: u64) -> Self {
        RandomStream::new(splitmix64(self.seed ^ splitmix64(index)))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_are_position_independent() {
        let mut parent = RandomStream::new(7);
        let before = parent.child(3).uniform();
        parent.uniform();
        parent.standard_normal();
        assert_eq!(parent.child(3).uniform(), before);
        assert_ne!(parent.child(4).uniform(), before);
    }
}
