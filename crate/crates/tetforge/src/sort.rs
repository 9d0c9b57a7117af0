//! Multi-threaded key/value radix sort.

use std::thread;

use tetforge_core::sfc::{digit, pass_count, radix_sort_pairs, SfcKey, BUCKETS};

/// Below this many pairs per thread the sequential sort is used.
const MIN_CHUNK: usize = 1 << 14;

/// Stable LSD radix sort on up to `threads` threads. Same result as
/// [`radix_sort_pairs`].
///
/// Each pass counts digits per thread chunk, then carves the destination
/// into one slice per (bucket, thread) so every thread scatters into its
/// own slices.
pub fn par_radix_sort_pairs(pairs: &mut [SfcKey], key_bits: u32, threads: usize) {
    let n = pairs.len();
    let threads = threads.clamp(1, n.div_ceil(MIN_CHUNK).max(1));
    if threads == 1 {
        radix_sort_pairs(pairs, key_bits);
        return;
    }
    let chunk = n.div_ceil(threads);
    let mut buf = vec![SfcKey::default(); n];
    let mut in_buf = false;
    for pass in 0..pass_count(key_bits) {
        let (src, dst): (&[SfcKey], &mut [SfcKey]) = if in_buf { (&buf, &mut *pairs) } else { (&*pairs, &mut buf) };
        let hist: Vec<[usize; BUCKETS]> = thread::scope(|s| {
            let handles: Vec<_> = src
                .chunks(chunk)
                .map(|c| {
                    s.spawn(move || {
                        let mut h = [0usize; BUCKETS];
                        for p in c {
                            h[digit(p.key, pass)] += 1;
                        }
                        h
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("histogram thread")).collect()
        });
        let total = |b: usize| hist.iter().map(|h| h[b]).sum::<usize>();
        if total(digit(src[0].key, pass)) == n {
            continue;
        }
        // bucket-major, thread-minor: exactly the stable output order
        let mut slices: Vec<Vec<&mut [SfcKey]>> = (0..hist.len()).map(|_| Vec::with_capacity(BUCKETS)).collect();
        let mut rest = dst;
        for b in 0..BUCKETS {
            for (t, h) in hist.iter().enumerate() {
                let (head, tail) = rest.split_at_mut(h[b]);
                slices[t].push(head);
                rest = tail;
            }
        }
        thread::scope(|s| {
            for (c, mut out) in src.chunks(chunk).zip(slices) {
                s.spawn(move || {
                    let mut fill = [0usize; BUCKETS];
                    for p in c {
                        let b = digit(p.key, pass);
                        out[b][fill[b]] = *p;
                        fill[b] += 1;
                    }
                });
            }
        });
        in_buf = !in_buf;
    }
    if in_buf {
        pairs.copy_from_slice(&buf);
    }
}
