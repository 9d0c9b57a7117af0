//! Multi-component floating-point expansions.
//!
//! An expansion is a sum of doubles, stored in order of increasing magnitude
//! with no two components overlapping and no zero components. Sums and
//! products are exact as long as nothing overflows or underflows, which holds
//! for coordinates well inside `[2^-140, 2^140]`.

use alloc::vec::Vec;

use super::Sign;

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[inline]
pub(crate) fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    let b_virt = x - a;
    (x, b - b_virt)
}

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    let b_virt = x - a;
    let a_virt = x - b_virt;
    let b_round = b - b_virt;
    let a_round = a - a_virt;
    (x, a_round + b_round)
}

#[inline]
pub(crate) fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let x = a - b;
    let b_virt = a - x;
    let a_virt = x + b_virt;
    let b_round = b_virt - b;
    let a_round = a - a_virt;
    (x, a_round + b_round)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let a_big = c - a;
    let hi = c - a_big;
    (hi, a - hi)
}

#[inline]
pub(crate) fn two_product(a: f64, b: f64) -> (f64, f64) {
    let x = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err1 = x - ahi * bhi;
    let err2 = err1 - alo * bhi;
    let err3 = err2 - ahi * blo;
    (x, alo * blo - err3)
}

/// An exact sum of non-overlapping doubles, smallest magnitude first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expansion(Vec<f64>);

impl Expansion {
    pub fn zero() -> Self {
        Expansion(Vec::new())
    }

    pub fn from_f64(a: f64) -> Self {
        if a == 0.0 {
            Self::zero()
        } else {
            Expansion(alloc::vec![a])
        }
    }

    fn from_pair(hi: f64, lo: f64) -> Self {
        let mut v = Vec::with_capacity(2);
        if lo != 0.0 {
            v.push(lo);
        }
        if hi != 0.0 {
            v.push(hi);
        }
        Expansion(v)
    }

    /// Exact `a - b`.
    pub fn diff(a: f64, b: f64) -> Self {
        let (x, y) = two_diff(a, b);
        Self::from_pair(x, y)
    }

    /// Exact `a * b`.
    pub fn product(a: f64, b: f64) -> Self {
        let (x, y) = two_product(a, b);
        Self::from_pair(x, y)
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sign of the represented value; the largest component dominates.
    pub fn sign(&self) -> Sign {
        match self.0.last() {
            None => Sign::Zero,
            Some(&v) if v > 0.0 => Sign::Positive,
            Some(_) => Sign::Negative,
        }
    }

    /// Rounded value of the sum.
    pub fn estimate(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn neg(&self) -> Self {
        Expansion(self.0.iter().map(|c| -c).collect())
    }

    /// Exact sum of two expansions.
    pub fn add(&self, other: &Expansion) -> Expansion {
        let e = &self.0;
        let f = &other.0;
        if e.is_empty() {
            return other.clone();
        }
        if f.is_empty() {
            return self.clone();
        }
        let mut h = Vec::with_capacity(e.len() + f.len());
        let (mut ei, mut fi) = (0usize, 0usize);
        let mut enow = e[0];
        let mut fnow = f[0];
        let mut q;
        if (fnow > enow) == (fnow > -enow) {
            q = enow;
            ei += 1;
        } else {
            q = fnow;
            fi += 1;
        }
        if ei < e.len() && fi < f.len() {
            enow = e[ei];
            fnow = f[fi];
            let (qn, hh) = if (fnow > enow) == (fnow > -enow) {
                ei += 1;
                fast_two_sum(enow, q)
            } else {
                fi += 1;
                fast_two_sum(fnow, q)
            };
            q = qn;
            if hh != 0.0 {
                h.push(hh);
            }
            while ei < e.len() && fi < f.len() {
                enow = e[ei];
                fnow = f[fi];
                let (qn, hh) = if (fnow > enow) == (fnow > -enow) {
                    ei += 1;
                    two_sum(q, enow)
                } else {
                    fi += 1;
                    two_sum(q, fnow)
                };
                q = qn;
                if hh != 0.0 {
                    h.push(hh);
                }
            }
        }
        for &c in e[ei..].iter().chain(f[fi..].iter()) {
            let (qn, hh) = two_sum(q, c);
            q = qn;
            if hh != 0.0 {
                h.push(hh);
            }
        }
        if q != 0.0 {
            h.push(q);
        }
        Expansion(h)
    }

    pub fn sub(&self, other: &Expansion) -> Expansion {
        self.add(&other.neg())
    }

    /// Exact product with a single double.
    pub fn scale(&self, b: f64) -> Expansion {
        let e = &self.0;
        if e.is_empty() || b == 0.0 {
            return Self::zero();
        }
        let mut h = Vec::with_capacity(2 * e.len());
        let (mut q, hh) = two_product(e[0], b);
        if hh != 0.0 {
            h.push(hh);
        }
        for &c in &e[1..] {
            let (p1, p0) = two_product(c, b);
            let (sum, hh) = two_sum(q, p0);
            if hh != 0.0 {
                h.push(hh);
            }
            let (qn, hh) = fast_two_sum(p1, sum);
            q = qn;
            if hh != 0.0 {
                h.push(hh);
            }
        }
        if q != 0.0 {
            h.push(q);
        }
        Expansion(h)
    }

    /// Exact product of two expansions.
    pub fn mul(&self, other: &Expansion) -> Expansion {
        let (long, short) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        let mut acc = Self::zero();
        for &c in &short.0 {
            acc = acc.add(&long.scale(c));
        }
        acc
    }
}

/// Exact 3x3 determinant of expansion entries, rows `r0`, `r1`, `r2`.
pub(crate) fn det3(r0: &[Expansion; 3], r1: &[Expansion; 3], r2: &[Expansion; 3]) -> Expansion {
    let m0 = r1[1].mul(&r2[2]).sub(&r1[2].mul(&r2[1]));
    let m1 = r1[0].mul(&r2[2]).sub(&r1[2].mul(&r2[0]));
    let m2 = r1[0].mul(&r2[1]).sub(&r1[1].mul(&r2[0]));
    r0[0].mul(&m0).sub(&r0[1].mul(&m1)).add(&r0[2].mul(&m2))
}
