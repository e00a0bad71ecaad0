//! Sources of uniform variates.
//!
//! Every simulator in this crate draws its randomness through
//! [`VariateSource`], so a trajectory is a pure function of the stream it is
//! fed. Any [`rand::RngCore`] is a source; [`ScriptedVariates`] replays a
//! fixed list, which is how tests force particular draw sequences.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait VariateSource {
    /// Uniform on the open interval (0, 1).
    fn next_open01(&mut self) -> f64;

    /// Uniform integer in `0..n`. `n` must be positive.
    fn next_below(&mut self, n: u64) -> u64 {
        let k = (self.next_open01() * n as f64) as u64;
        k.min(n - 1)
    }
}

impl<R: RngCore> VariateSource for R {
    fn next_open01(&mut self) -> f64 {
        self.sample(Open01)
    }

    fn next_below(&mut self, n: u64) -> u64 {
        self.random_range(0..n)
    }
}

/// Replays a fixed list of uniforms, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedVariates {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedVariates {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            !values.is_empty(),
            "scripted stream needs at least one value"
        );
        assert!(
            values.iter().all(|&u| u > 0.0 && u < 1.0),
            "scripted values must lie in (0, 1)"
        );
        Self { values, pos: 0 }
    }
}

impl VariateSource for ScriptedVariates {
    fn next_open01(&mut self) -> f64 {
        let u = self.values[self.pos % self.values.len()];
        self.pos += 1;
        u
    }
}

/// The generator used for seeded runs throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
