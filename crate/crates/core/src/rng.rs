//! Counter-based random streams.
//!
//! A [`Stream`] is a 64-bit key built by hashing a path of labels and
//! indices (`master -> run -> generation -> individual -> purpose`).
//! Each key seeds its own ChaCha8 generator, so the numbers an evaluation
//! draws depend only on where it sits in the experiment tree and never on
//! the order in which a thread pool happens to schedule it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream(u64);

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a; labels are short static strings.
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl Stream {
    pub fn root(seed: u64) -> Self {
        Stream(mix(seed ^ 0x5EED_0FE7_E45A_9E01))
    }

    pub fn key(&self) -> u64 {
        self.0
    }

    /// Child stream for an integer index (run, generation, individual, frame).
    pub fn index(&self, i: u64) -> Self {
        Stream(mix(self.0 ^ mix(i.wrapping_add(0xA5A5_A5A5))))
    }

    /// Child stream for a named purpose.
    pub fn label(&self, name: &str) -> Self {
        Stream(mix(self.0.rotate_left(17) ^ hash_label(name)))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
