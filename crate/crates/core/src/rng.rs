//! Named, seed-derived random streams.
//!
//! Every consumer of randomness asks for a stream by name. The stream's key is
//! derived from the root seed and the full name path, so adding a new consumer
//! never perturbs the draws seen by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The concrete generator handed out for every named stream.
pub type StreamRng = ChaCha8Rng;

/// A root seed plus a name path. Cheap to clone; split with [`SeedStreams::child`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
    path: String,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: String::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Namespace for a sub-component. `child("a").child("b")` and `child("a/b")` coincide.
    pub fn child(&self, name: &str) -> Self {
        Self {
            seed: self.seed,
            path: self.join(name),
        }
    }

    /// Generator for the stream `name` under this namespace.
    pub fn stream(&self, name: &str) -> StreamRng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.join(name).as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(key)
    }

    fn join(&self, name: &str) -> String {
        if self.path.is_empty() {
            name.to_string()
        } else {
            format!("{}/{}", self.path, name)
        }
    }
}
