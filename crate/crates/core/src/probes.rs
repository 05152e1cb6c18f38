//! Reproducible random probe vectors.
//!
//! Vector `i` of a stream is generated from its own ChaCha8 stream keyed by
//! `(seed, i)`, so a probe depends only on its index and never on how many
//! other probes were drawn before it or on which thread drew them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Gaussian,
    Rademacher,
}

impl std::str::FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "g" | "normal" => Ok(Self::Gaussian),
            "rademacher" | "r" => Ok(Self::Rademacher),
            other => Err(format!("unknown probe distribution '{other}'")),
        }
    }
}

/// A seekable, deterministic sequence of probe vectors of a fixed length.
#[derive(Debug, Clone)]
pub struct ProbeStream {
    seed: u64,
    dist: Distribution,
    dim: usize,
    index: u64,
}

impl ProbeStream {
    pub fn new(seed: u64, dist: Distribution, dim: usize) -> Self {
        Self {
            seed,
            dist,
            dim,
            index: 0,
        }
    }

    pub fn gaussian(seed: u64, dim: usize) -> Self {
        Self::new(seed, Distribution::Gaussian, dim)
    }

    pub fn rademacher(seed: u64, dim: usize) -> Self {
        Self::new(seed, Distribution::Rademacher, dim)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> Distribution {
        self.dist
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vectors drawn so far.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// The `index`-th vector of this stream, without advancing it.
    pub fn probe_at(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        match self.dist {
            Distribution::Gaussian => (0..self.dim).map(|_| rng.sample(StandardNormal)).collect(),
            Distribution::Rademacher => (0..self.dim)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        }
    }

    pub fn next_probe(&mut self) -> Vec<f64> {
        let v = self.probe_at(self.index);
        self.index += 1;
        v
    }

    /// The next `count` probes, one per entry of the returned vector (columns of Ω).
    pub fn probe_block(&mut self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.next_probe()).collect()
    }

    /// An independent stream for a sub-task, derived from this stream's seed
    /// and `tag`. The same tag always gives the same child.
    pub fn fork(&self, tag: u64) -> Self {
        Self::new(derive_seed(self.seed, tag), self.dist, self.dim)
    }

    /// Same seed and index, different distribution.
    pub fn with_distribution(&self, dist: Distribution) -> Self {
        Self { dist, ..self.clone() }
    }
}

/// Mixes a base seed with an offset (SplitMix64 finalizer) to get a sub-seed.
/// Used for per-trial and per-task seeds throughout the crate and CLI.
pub fn derive_seed(seed: u64, offset: u64) -> u64 {
    let mut z = seed ^ offset.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
