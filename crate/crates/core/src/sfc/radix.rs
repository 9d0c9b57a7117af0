use alloc::vec;
use alloc::vec::Vec;

/// A curve index paired with the id of the point it was computed for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SfcKey {
    pub key: u64,
    pub value: u64,
}

pub const RADIX_BITS: u32 = 8;
pub const BUCKETS: usize = 1 << RADIX_BITS;

/// Number of 8-bit digit passes needed for keys below `2^key_bits`.
#[inline]
pub fn pass_count(key_bits: u32) -> usize {
    key_bits.min(64).div_ceil(RADIX_BITS) as usize
}

#[inline]
pub fn digit(key: u64, pass: usize) -> usize {
    ((key >> (pass as u32 * RADIX_BITS)) & (BUCKETS as u64 - 1)) as usize
}

/// Per-pass digit histograms, gathered in one scan.
pub fn histograms(pairs: &[SfcKey], passes: usize) -> Vec<[usize; BUCKETS]> {
    let mut h = vec![[0usize; BUCKETS]; passes];
    for p in pairs {
        for (pass, hist) in h.iter_mut().enumerate() {
            hist[digit(p.key, pass)] += 1;
        }
    }
    h
}

/// Stable least-significant-digit radix sort of `pairs` by key.
///
/// Passes where every key has the same digit are skipped, so short keys in
/// a wide type cost only the passes their spread requires.
pub fn radix_sort_pairs(pairs: &mut [SfcKey], key_bits: u32) {
    let n = pairs.len();
    if n < 2 {
        return;
    }
    let passes = pass_count(key_bits);
    debug_assert!(key_bits >= 64 || pairs.iter().all(|p| p.key >> key_bits == 0), "key exceeds declared width");
    let hist = histograms(pairs, passes);
    let mut buf = vec![SfcKey::default(); n];
    let mut in_buf = false;
    for (pass, h) in hist.iter().enumerate() {
        if h[digit(pairs[0].key, pass)] == n {
            continue;
        }
        let mut offsets = [0usize; BUCKETS];
        let mut sum = 0;
        for (o, &c) in offsets.iter_mut().zip(h.iter()) {
            *o = sum;
            sum += c;
        }
        let (src, dst): (&[SfcKey], &mut [SfcKey]) = if in_buf { (&buf, pairs) } else { (pairs, &mut buf) };
        for p in src {
            let b = digit(p.key, pass);
            dst[offsets[b]] = *p;
            offsets[b] += 1;
        }
        in_buf = !in_buf;
    }
    if in_buf {
        pairs.copy_from_slice(&buf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(keys: &[u64]) -> Vec<SfcKey> {
        keys.iter().enumerate().map(|(i, &k)| SfcKey { key: k, value: i as u64 }).collect()
    }

    #[test]
    fn sorts_small_example() {
        let mut p = pairs(&[3, 1, 2]);
        radix_sort_pairs(&mut p, 2);
        assert_eq!(p.iter().map(|x| (x.key, x.value)).collect::<Vec<_>>(), [(1, 1), (2, 2), (3, 0)]);
    }

    #[test]
    fn equal_keys_stay_in_order() {
        let mut p = pairs(&[5, 5]);
        radix_sort_pairs(&mut p, 3);
        assert_eq!(p.iter().map(|x| x.value).collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn full_width_keys() {
        let mut p = pairs(&[u64::MAX, 0, 1 << 63, 42]);
        radix_sort_pairs(&mut p, 64);
        assert_eq!(p.iter().map(|x| x.key).collect::<Vec<_>>(), [0, 42, 1 << 63, u64::MAX]);
    }

    #[test]
    fn pass_counts() {
        assert_eq!(pass_count(0), 0);
        assert_eq!(pass_count(1), 1);
        assert_eq!(pass_count(8), 1);
        assert_eq!(pass_count(9), 2);
        assert_eq!(pass_count(63), 8);
        assert_eq!(pass_count(64), 8);
    }
}
