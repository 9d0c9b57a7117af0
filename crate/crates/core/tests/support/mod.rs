//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod exact;
pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use tetforge_core::Point3;

pub fn uniform_points(n: usize, seed: u64) -> Vec<Point3> {
    let mut r = SplitMix64::seed_from_u64(seed);
    (0..n).map(|_| Point3::new(r.random(), r.random(), r.random())).collect()
}
