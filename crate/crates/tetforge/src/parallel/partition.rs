//! Curve-range partitions, tetrahedron ownership and the thread schedule.

use std::ops::Range;

use tetforge_core::rng::stream;
use tetforge_core::sfc::{GridTransform, SfcConfig, SfcKey};
use tetforge_core::{VertexId, GHOST};

/// Partition id of tetrahedra that belong to no thread.
pub const BUFFER: u16 = u16::MAX;

/// Per-thread ranges of curve indices under one grid configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTable {
    /// `starts[k]` opens the range of thread `k`; it closes at
    /// `starts[k + 1]`, and the last range is open-ended.
    pub starts: Vec<u64>,
    pub cfg: SfcConfig,
}

impl PartitionTable {
    pub fn threads(&self) -> usize {
        self.starts.len()
    }

    /// `[start, end)` of thread `k`; `None` as end means unbounded.
    pub fn range(&self, k: usize) -> (u64, Option<u64>) {
        (self.starts[k], self.starts.get(k + 1).copied())
    }

    /// Thread whose range holds `key`.
    #[inline]
    pub fn part_of_key(&self, key: u64) -> u16 {
        (self.starts.partition_point(|&s| s <= key).max(1) - 1) as u16
    }
}

/// Cuts curve-sorted points into equal contiguous blocks, one per thread.
///
/// The first `len % threads` blocks get one extra point. A block boundary
/// never separates two equal keys: it moves forward past the run.
pub fn partition_points(sorted: &[SfcKey], threads: usize, cfg: SfcConfig) -> (PartitionTable, Vec<Range<usize>>) {
    let threads = threads.max(1);
    let len = sorted.len();
    let (base, extra) = (len / threads, len % threads);
    let mut blocks = Vec::with_capacity(threads);
    let mut starts = Vec::with_capacity(threads);
    let mut begin = 0;
    for k in 0..threads {
        let mut end = (begin + base + usize::from(k < extra)).min(len);
        if k + 1 == threads {
            end = len;
        }
        while end > begin && end < len && sorted[end - 1].key == sorted[end].key {
            end += 1;
        }
        starts.push(if k == 0 {
            0
        } else if begin < len {
            sorted[begin].key
        } else {
            u64::MAX
        });
        blocks.push(begin..end);
        begin = end;
    }
    (PartitionTable { starts, cfg }, blocks)
}

/// Thread owning a tetrahedron: the partition holding at least three of its
/// vertices, or [`BUFFER`].
#[inline]
pub fn owner_of_tet(v: [VertexId; 4], part: &[u16], ghost_part: u16) -> u16 {
    let p = v.map(|x| if x == GHOST { ghost_part } else { part[x as usize] });
    for i in 0..2 {
        let c = p.iter().filter(|&&q| q == p[i]).count();
        if c >= 3 {
            return p[i];
        }
    }
    BUFFER
}

/// Thread count for the next attempt.
///
/// Goes sequential when the success ratio is at most one over the thread
/// count; otherwise halves once when the ratio is under 1/5 or fewer than
/// 3000 points per thread remain.
pub fn reduction_policy(rho: f64, threads: usize, remaining: usize) -> usize {
    if threads <= 1 {
        return 1;
    }
    if rho <= 1.0 / threads as f64 {
        return 1;
    }
    if rho < 0.2 || remaining < 3000 * threads {
        return (threads / 2).max(1);
    }
    threads
}

/// A new random grid transform and curve shift for `cfg`.
pub fn reshuffle(cfg: &SfcConfig, seed: u64, tags: &[u64]) -> SfcConfig {
    cfg.with_transform(GridTransform::random(&mut stream(seed, tags)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tetforge_core::{Aabb, Point3};

    fn cfg() -> SfcConfig {
        SfcConfig::new(Aabb { min: Point3::new(0.0, 0.0, 0.0), max: Point3::new(1.0, 1.0, 1.0) }, 4)
    }

    fn keys(k: &[u64]) -> Vec<SfcKey> {
        k.iter().enumerate().map(|(i, &key)| SfcKey { key, value: i as u64 }).collect()
    }

    #[test]
    fn equal_blocks() {
        let sorted = keys(&(0..20).map(|i| i * 10).collect::<Vec<_>>());
        let (t, b) = partition_points(&sorted, 4, cfg());
        assert_eq!(b.iter().map(|r| r.len()).collect::<Vec<_>>(), [5, 5, 5, 5]);
        assert_eq!(t.starts, [0, 50, 100, 150]);
        assert_eq!(t.range(3), (150, None));
        let (_, b) = partition_points(&keys(&[1, 2, 3, 4, 5, 6, 7]), 4, cfg());
        assert_eq!(b.iter().map(|r| r.len()).collect::<Vec<_>>(), [2, 2, 2, 1]);
        let (t, b) = partition_points(&keys(&[4, 9]), 1, cfg());
        assert_eq!(t.starts, vec![0]);
        assert_eq!((b.len(), b[0].start, b[0].end), (1, 0, 2));
    }

    #[test]
    fn blocks_agree_with_ranges() {
        let sorted = keys(&[1, 3, 3, 3, 3, 8, 9, 9, 12, 20]);
        let (t, blocks) = partition_points(&sorted, 4, cfg());
        for (k, r) in blocks.iter().enumerate() {
            for p in &sorted[r.clone()] {
                assert_eq!(t.part_of_key(p.key), k as u16);
            }
        }
    }

    #[test]
    fn ownership_rule() {
        let part = [1, 1, 1, 2, 2, 3, 3, 4, 4, 4, 4];
        assert_eq!(owner_of_tet([0, 1, 2, 3], &part, 0), 1);
        assert_eq!(owner_of_tet([3, 4, 5, 6], &part, 0), BUFFER);
        assert_eq!(owner_of_tet([7, 8, 9, 10], &part, 0), 4);
        assert_eq!(owner_of_tet([GHOST, 7, 8, 9], &part, 4), 4);
        assert_eq!(owner_of_tet([GHOST, 7, 8, 0], &part, 1), BUFFER);
    }

    #[test]
    fn schedule_rules() {
        assert_eq!(reduction_policy(0.15, 8, 1_000_000), 4);
        assert_eq!(reduction_policy(0.9, 8, 20_000), 4);
        assert_eq!(reduction_policy(0.10, 8, 1_000_000), 1);
        assert_eq!(reduction_policy(0.9, 8, 100_000), 8);
        assert_eq!(reduction_policy(0.0, 1, 10), 1);
    }

    #[test]
    fn reshuffle_is_replayable() {
        let a = reshuffle(&cfg(), 7, &[1, 2]);
        assert_eq!(a, reshuffle(&cfg(), 7, &[1, 2]));
        assert_ne!(a, reshuffle(&cfg(), 7, &[1, 3]));
        assert!(cfg().transform.is_identity());
    }
}
