//! Seeded random streams.
//!
//! Every random decision in the crate draws from a [`Stream`]. Child streams
//! are seeded from a `u64` drawn from the parent, so independent work items
//! (one decode per offspring, one hill climb per generation) get their own
//! reproducible stream regardless of how they are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a seed for a child stream from `parent`.
pub fn child_seed<R: RngCore + ?Sized>(parent: &mut R) -> u64 {
    parent.next_u64()
}
