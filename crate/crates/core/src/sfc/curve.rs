//! Hilbert and Moore indices on a `2^m`-per-axis grid.

/// Octant visiting order of the Moore curve (bit 0 = x, bit 1 = y, bit 2 = z).
const MOORE_OCTANTS: [u32; 8] = [0, 1, 3, 2, 6, 7, 5, 4];

/// Cube symmetry applied to the Hilbert sub-curve in each octant, listed in
/// visiting order: axis permutation and per-axis reflection mask. Chosen so
/// that each sub-curve exits next to where the following one enters,
/// including the wrap from the last octant back to the first.
const MOORE_SYMMETRY: [([usize; 3], u32); 8] = [
    ([0, 1, 2], 4),
    ([1, 0, 2], 4),
    ([1, 0, 2], 4),
    ([0, 1, 2], 7),
    ([0, 1, 2], 2),
    ([1, 0, 2], 2),
    ([1, 0, 2], 2),
    ([0, 1, 2], 1),
];

const OCTANT_RANK: [u64; 8] = {
    let mut r = [0u64; 8];
    let mut i = 0;
    while i < 8 {
        r[MOORE_OCTANTS[i] as usize] = i as u64;
        i += 1;
    }
    r
};

/// Spreads the low 21 bits of `v` so bit `i` lands at bit `3i`.
#[inline]
fn spread3(v: u32) -> u64 {
    let mut x = u64::from(v) & 0x1f_ffff;
    x = (x | (x << 32)) & 0x001f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x001f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

/// Index of cell `c` along the `bits`-deep Hilbert curve that starts at the
/// origin cell and ends at `(2^bits - 1, 0, 0)`.
#[inline]
pub fn hilbert_index(c: [u32; 3], bits: u32) -> u64 {
    if bits == 0 {
        return 0;
    }
    let mut x = c;
    let top = 1u32 << (bits - 1);
    let mut q = top;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    x[1] ^= x[0];
    x[2] ^= x[1];
    let mut t = 0;
    q = top;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    (spread3(x[0] ^ t) << 2) | (spread3(x[1] ^ t) << 1) | spread3(x[2] ^ t)
}

/// Index of cell `c` along the closed Moore curve of depth `m` (`1..=21`).
#[inline]
pub fn moore_index_cell(c: [u32; 3], m: u32) -> u64 {
    debug_assert!((1..=21).contains(&m));
    let sub_bits = m - 1;
    let octant = ((c[0] >> sub_bits) & 1) | (((c[1] >> sub_bits) & 1) << 1) | (((c[2] >> sub_bits) & 1) << 2);
    let rank = OCTANT_RANK[octant as usize];
    let (perm, refl) = MOORE_SYMMETRY[rank as usize];
    let low = (1u32 << sub_bits).wrapping_sub(1);
    let mut local = [0u32; 3];
    for k in 0..3 {
        let l = c[k] & low;
        local[perm[k]] = if (refl >> k) & 1 == 1 { low - l } else { l };
    }
    (rank << (3 * sub_bits)) | hilbert_index(local, sub_bits)
}
