//! Rational-arithmetic predicates built directly from determinant
//! definitions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use tetforge_core::Point3;

pub fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

pub fn sign(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Determinant by fraction-free cofactor expansion along the first row.
pub fn det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = BigRational::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigRational>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * det(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Coordinates of all points as integers over one common power of two.
fn to_ints(p: &[Point3]) -> Vec<[BigInt; 3]> {
    let parts: Vec<[(i64, i16); 3]> = p
        .iter()
        .map(|p| {
            [p.x, p.y, p.z].map(|x| {
                assert!(x.is_finite());
                let (m, e, s) = num_traits::Float::integer_decode(x);
                (i64::from(s) * m as i64, e)
            })
        })
        .collect();
    let min_e = parts.iter().flatten().filter(|(m, _)| *m != 0).map(|&(_, e)| e).min().unwrap_or(0);
    parts.iter().map(|c| c.map(|(m, e)| BigInt::from(m) << (e - min_e) as usize)).collect()
}

fn sign_int(x: &BigInt) -> i8 {
    match x.sign() {
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    }
}

fn det_int(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = BigInt::from(0);
    for j in 0..n {
        if m[0][j].sign() == num_bigint::Sign::NoSign {
            continue;
        }
        let minor: Vec<Vec<BigInt>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * det_int(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Sign of `(b-a).((c-a)x(d-a))`; positive for the unit tetrahedron.
pub fn orient(a: Point3, b: Point3, c: Point3, d: Point3) -> i8 {
    let v = to_ints(&[a, b, c, d]);
    let rows: Vec<Vec<BigInt>> =
        v.iter().map(|p| vec![p[0].clone(), p[1].clone(), p[2].clone(), BigInt::from(1)]).collect();
    // rows in order a, b, c, d give the negated triple product
    -sign_int(&det_int(&rows))
}

/// Rows `[x y z w 1]` where `w` is `|p|^2`, or for `lift = Some(r)` the
/// derivative of the determinant in row r's lifted entry.
fn lifted_det(p: &[Point3; 5], lift: Option<usize>) -> BigInt {
    let rows: Vec<Vec<BigInt>> = to_ints(p)
        .into_iter()
        .enumerate()
        .map(|(i, [x, y, z])| {
            let w = match lift {
                Some(r) => BigInt::from(u8::from(r == i)),
                None => &x * &x + &y * &y + &z * &z,
            };
            vec![x, y, z, w, BigInt::from(1)]
        })
        .collect();
    det_int(&rows)
}

/// Positive when `e` is strictly inside the sphere through positively
/// oriented `a, b, c, d`.
pub fn in_sphere(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> i8 {
    let v = lifted_det(&[a, b, c, d, e], None);
    // calibrated on the unit tetrahedron with e at (1/4, 1/4, 1/4)
    -sign_int(&v) * orient(a, b, c, d)
}

/// The same test with lifted values `|p_i|^2 + eps^(rank of ids[i])`,
/// evaluated as a polynomial in `eps`.
pub fn perturbed_in_sphere(p: [Point3; 5], ids: [u32; 5]) -> i8 {
    let o = orient(p[0], p[1], p[2], p[3]);
    let v = lifted_det(&p, None);
    if sign_int(&v) != 0 {
        return -sign_int(&v) * o;
    }
    let mut rows: Vec<usize> = (0..5).collect();
    rows.sort_by_key(|&r| ids[r]);
    for r in rows {
        let c = lifted_det(&p, Some(r));
        if sign_int(&c) != 0 {
            return -sign_int(&c) * o;
        }
    }
    0
}

/// Floating filter in front of the rational predicates, with a deliberately
/// loose error bound.
pub fn orient_fast(a: Point3, b: Point3, c: Point3, d: Point3) -> i8 {
    let (u, v, w) = (b - a, c - a, d - a);
    let det = u.dot(v.cross(w));
    let perm = (u.x.abs() * (v.y * w.z).abs()
        + u.x.abs() * (v.z * w.y).abs()
        + u.y.abs() * (v.x * w.z).abs()
        + u.y.abs() * (v.z * w.x).abs()
        + u.z.abs() * (v.x * w.y).abs()
        + u.z.abs() * (v.y * w.x).abs())
        * 1e-12;
    if det > perm {
        1
    } else if det < -perm {
        -1
    } else {
        orient(a, b, c, d)
    }
}

pub fn in_sphere_fast(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> i8 {
    let rows: Vec<[f64; 4]> = [b, c, d, e]
        .iter()
        .map(|p| {
            let t = *p - a;
            [t.x, t.y, t.z, t.norm2()]
        })
        .collect();
    let (v, perm) = det4_float(&rows);
    if v.abs() > perm * 1e-10 {
        // same calibration as the rational version: rows relative to a
        // reproduce the 5x5 determinant
        let s = if v > 0.0 { 1 } else { -1 };
        return -s * orient_fast(a, b, c, d);
    }
    in_sphere(a, b, c, d, e)
}

fn det4_float(r: &[[f64; 4]]) -> (f64, f64) {
    let mut total = 0.0;
    let mut perm = 0.0;
    let idx = [0usize, 1, 2, 3];
    // Leibniz expansion; 24 terms is plenty fast for tests
    let mut p = idx;
    let mut sgn = 1.0;
    loop {
        let t = r[0][p[0]] * r[1][p[1]] * r[2][p[2]] * r[3][p[3]];
        total += sgn * t;
        perm += t.abs();
        // next permutation with parity tracking
        let mut i = 2isize;
        while i >= 0 && p[i as usize] > p[i as usize + 1] {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        let mut j = 3;
        while p[j] < p[i] {
            j -= 1;
        }
        p.swap(i, j);
        sgn = -sgn;
        let tail = &mut p[i + 1..];
        let swaps = tail.len() / 2;
        tail.reverse();
        if swaps % 2 == 1 {
            sgn = -sgn;
        }
    }
    (total, perm)
}
