//! Space-filling-curve ordering: Moore indices, grid transforms, radix sort
//! and the BRIO round plan.

mod curve;
mod radix;
mod transform;

use alloc::vec::Vec;

use rand::seq::SliceRandom;

pub use curve::{hilbert_index, moore_index_cell};
pub use radix::{digit, histograms, pass_count, radix_sort_pairs, SfcKey, BUCKETS, RADIX_BITS};
pub use transform::GridTransform;

use crate::geom::{Aabb, Point3};
use crate::{Error, Result};

pub const MAX_RESOLUTION: u32 = 21;

/// `clamp(round(k * log2 n), 1, 21)`.
pub fn choose_resolution(n: usize, k: f64) -> u32 {
    let n = n.max(1) as f64;
    let m = libm::round(k * libm::log2(n));
    if m.is_nan() || m < 1.0 {
        1
    } else if m > MAX_RESOLUTION as f64 {
        MAX_RESOLUTION
    } else {
        m as u32
    }
}

/// Depth giving O(1) expected points per cell: `ceil(log2(n) / 3) + 2`,
/// clamped to `[1, 21]`.
pub fn default_resolution(n: usize) -> u32 {
    let lg = libm::log2(n.max(1) as f64);
    let m = libm::ceil(lg / 3.0) as u32 + 2;
    m.clamp(1, MAX_RESOLUTION)
}

/// Grid on which curve indices are computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SfcConfig {
    pub bbox: Aabb,
    pub m: u32,
    pub transform: GridTransform,
}

impl SfcConfig {
    /// Identity-transformed grid of depth `m` over `bbox`. Flat axes of the
    /// box are padded so every axis has positive extent.
    pub fn new(bbox: Aabb, m: u32) -> Self {
        SfcConfig { bbox: bbox.fattened(), m: m.clamp(1, MAX_RESOLUTION), transform: GridTransform::IDENTITY }
    }

    /// Grid over the points' bounding box with the default depth for `n`.
    pub fn for_points(points: &[Point3], n: usize) -> Option<Self> {
        Aabb::of(points).map(|b| Self::new(b, default_resolution(n)))
    }

    #[must_use]
    pub fn with_transform(mut self, t: GridTransform) -> Self {
        self.transform = t;
        self
    }

    #[must_use]
    pub fn with_resolution(mut self, m: u32) -> Self {
        self.m = m.clamp(1, MAX_RESOLUTION);
        self
    }

    /// Width in bits of the keys produced by this grid.
    pub fn key_bits(&self) -> u32 {
        3 * self.m
    }

    /// Grid cell of a point; points on the max face land in the last cell.
    #[inline]
    pub fn cell(&self, p: Point3) -> [u32; 3] {
        let n = (1u32 << self.m) as f64;
        let last = (1u32 << self.m) - 1;
        let mut c = [0u32; 3];
        for (axis, out) in c.iter_mut().enumerate() {
            let lo = self.bbox.min.coord(axis);
            let hi = self.bbox.max.coord(axis);
            let u = ((p.coord(axis) - lo) / (hi - lo)).clamp(0.0, 1.0);
            let v = self.transform.forward(axis, u);
            *out = ((v * n) as u32).min(last);
        }
        c
    }

    /// Curve index of a point known to lie inside the box.
    #[inline]
    pub fn key(&self, p: Point3) -> u64 {
        let d = moore_index_cell(self.cell(p), self.m);
        self.transform.shift_index(d, self.m)
    }
}

/// Curve index of `p` under `cfg`.
pub fn moore_index(p: Point3, cfg: &SfcConfig) -> Result<u64> {
    if !p.is_finite() || !cfg.bbox.contains(p) {
        return Err(Error::OutsideBox);
    }
    Ok(cfg.key(p))
}

/// Orders `ids` along the curve; ties keep their input order.
pub fn sort_round(points: &[Point3], ids: &[u32], cfg: &SfcConfig) -> Vec<u32> {
    let mut keys: Vec<SfcKey> =
        ids.iter().map(|&i| SfcKey { key: cfg.key(points[i as usize]), value: u64::from(i) }).collect();
    radix_sort_pairs(&mut keys, cfg.key_bits());
    keys.into_iter().map(|k| k.value as u32).collect()
}

pub const FIRST_ROUND: usize = 2048;
pub const ROUND_GROWTH: usize = 7;

/// Cumulative round ends for `n` points: `2048 * 7^i`, capped by `n`.
pub fn round_boundaries(n: usize) -> Vec<usize> {
    let mut b = Vec::new();
    let mut end = FIRST_ROUND;
    while end < n {
        b.push(end);
        end = end.saturating_mul(ROUND_GROWTH);
    }
    if n > 0 {
        b.push(n);
    }
    b
}

/// A shuffled insertion order cut into rounds of increasing size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrioPlan {
    pub order: Vec<u32>,
    /// Exclusive end offset of each round in `order`.
    pub boundaries: Vec<usize>,
}

impl BrioPlan {
    pub fn rounds(&self) -> impl Iterator<Item = &[u32]> + '_ {
        let mut start = 0;
        self.boundaries.iter().map(move |&end| {
            let r = &self.order[start..end];
            start = end;
            r
        })
    }

    pub fn round_sizes(&self) -> Vec<usize> {
        self.rounds().map(<[u32]>::len).collect()
    }
}

/// Shuffles `0..n` with `seed` and splits it into BRIO rounds.
pub fn brio_plan(n: usize, seed: u64) -> BrioPlan {
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut crate::rng::stream(seed, &[0x6272_696f]));
    BrioPlan { order, boundaries: round_boundaries(n) }
}
