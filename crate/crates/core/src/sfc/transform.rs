use rand::Rng;

/// Re-partitioning transform: per-axis piecewise-linear compression of the
/// normalized coordinate plus a cyclic shift of the curve index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridTransform {
    /// Normalized coordinate where the compressed and stretched pieces meet.
    pub threshold: [f64; 3],
    /// Image of the threshold; equal to `threshold` on an untransformed axis.
    pub image: [f64; 3],
    /// Offset added modulo `2^(3m)` to every curve index.
    pub shift: u64,
}

impl Default for GridTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl GridTransform {
    pub const IDENTITY: GridTransform = GridTransform { threshold: [0.5; 3], image: [0.5; 3], shift: 0 };

    /// A random transform: coordinates below a threshold in `[0.25, 0.75]`
    /// are compressed by a factor in `[0.25, 1)`, the rest stretched to
    /// keep the unit interval, and the index shift is uniform.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut t = GridTransform::IDENTITY;
        for axis in 0..3 {
            let th: f64 = rng.random_range(0.25..0.75);
            let factor: f64 = rng.random_range(0.25..1.0);
            t.threshold[axis] = th;
            t.image[axis] = th * factor;
        }
        t.shift = rng.random();
        t
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.threshold == self.image
    }

    /// Maps a normalized coordinate in `[0, 1]` to `[0, 1]`, monotonically.
    #[inline]
    pub fn forward(&self, axis: usize, u: f64) -> f64 {
        let t = self.threshold[axis];
        let s = self.image[axis];
        if t == s {
            u
        } else if u < t {
            u * (s / t)
        } else {
            s + (u - t) * ((1.0 - s) / (1.0 - t))
        }
    }

    /// Inverse of [`GridTransform::forward`].
    #[inline]
    pub fn inverse(&self, axis: usize, v: f64) -> f64 {
        let t = self.threshold[axis];
        let s = self.image[axis];
        if t == s {
            v
        } else if v < s {
            v * (t / s)
        } else {
            t + (v - s) * ((1.0 - t) / (1.0 - s))
        }
    }

    #[inline]
    pub fn shift_index(&self, d: u64, m: u32) -> u64 {
        d.wrapping_add(self.shift) & index_mask(m)
    }

    #[inline]
    pub fn unshift_index(&self, d: u64, m: u32) -> u64 {
        d.wrapping_sub(self.shift) & index_mask(m)
    }
}

#[inline]
pub(crate) fn index_mask(m: u32) -> u64 {
    (1u64 << (3 * m)) - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn cell_of(v: f64, m: u32) -> u32 {
        let n = (1u32 << m) as f64;
        ((v * n) as u32).min((1 << m) - 1)
    }

    #[test]
    fn identity_is_identity() {
        let t = GridTransform::IDENTITY;
        assert!(t.is_identity());
        for u in [0.0, 0.1, 0.5, 0.999, 1.0] {
            assert_eq!(t.forward(1, u), u);
        }
        assert_eq!(t.shift_index(17, 3), 17);
    }

    #[test]
    fn cell_roundtrip_is_exact_for_small_grids() {
        for s in 0..20 {
            let t = GridTransform::random(&mut stream(s, &[]));
            for m in 1..=3u32 {
                let n = 1u32 << m;
                for axis in 0..3 {
                    for c in 0..n {
                        let center = (c as f64 + 0.5) / n as f64;
                        let v = t.forward(axis, center);
                        assert!((0.0..=1.0).contains(&v));
                        assert_eq!(cell_of(t.inverse(axis, v), m), c);
                    }
                }
                let cells = 1u64 << (3 * m);
                let mut hit = alloc::vec![false; cells as usize];
                for d in 0..cells {
                    let e = t.shift_index(d, m);
                    assert!(!hit[e as usize]);
                    hit[e as usize] = true;
                    assert_eq!(t.unshift_index(e, m), d);
                }
            }
        }
    }

    #[test]
    fn forward_is_monotone_and_onto() {
        let t = GridTransform::random(&mut stream(3, &[]));
        for axis in 0..3 {
            assert_eq!(t.forward(axis, 0.0), 0.0);
            assert!((t.forward(axis, 1.0) - 1.0).abs() < 1e-15);
            let mut prev = -1.0;
            for i in 0..=1000 {
                let v = t.forward(axis, i as f64 / 1000.0);
                assert!(v > prev);
                prev = v;
            }
        }
    }
}
