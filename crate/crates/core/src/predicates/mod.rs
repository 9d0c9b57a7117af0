//! Robust orientation and in-sphere tests.
//!
//! Conventions used throughout the crate:
//!
//! * [`orient3d`] is the sign of `(b - a) . ((c - a) x (d - a))`. A tetrahedron
//!   `abcd` is *positively oriented* when this is [`Sign::Positive`]; the unit
//!   corner tetrahedron `(0,0,0) (1,0,0) (0,1,0) (0,0,1)` is positive.
//! * [`in_sphere`] returns [`Sign::Positive`] when `e` lies strictly inside the
//!   circumsphere of a positively oriented `abcd`.
//!
//! Every predicate first evaluates a floating-point estimate guarded by an
//! error bound and only falls back to exact expansion arithmetic when the
//! bound cannot certify the sign.

mod expansion;

pub use expansion::Expansion;
use expansion::{det3, two_diff, two_product};

use crate::geom::Point3;
use crate::Error;

/// Outcome of a sign test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Sign {
    Negative = -1,
    Zero = 0,
    Positive = 1,
}

impl Sign {
    #[inline]
    pub fn as_i8(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    #[inline]
    #[must_use]
    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

const EPS: f64 = f64::EPSILON * 0.5; // 2^-53
const O3D_BOUND_A: f64 = (7.0 + 56.0 * EPS) * EPS;
const ISP_BOUND_A: f64 = (16.0 + 224.0 * EPS) * EPS;
/// Forward error coefficient of the cached in-sphere combination, relative to
/// `L^5` where `L` bounds every coordinate difference. A first-order analysis
/// gives about 1224; the constant leaves better than a 3x margin.
const CACHED_BOUND: f64 = 4096.0 * EPS;

#[inline]
fn orient3d_estimate(a: Point3, b: Point3, c: Point3, d: Point3) -> (f64, f64) {
    let (ux, uy, uz) = (b.x - a.x, b.y - a.y, b.z - a.z);
    let (vx, vy, vz) = (c.x - a.x, c.y - a.y, c.z - a.z);
    let (wx, wy, wz) = (d.x - a.x, d.y - a.y, d.z - a.z);
    let vywz = vy * wz;
    let vzwy = vz * wy;
    let vzwx = vz * wx;
    let vxwz = vx * wz;
    let vxwy = vx * wy;
    let vywx = vy * wx;
    let det = ux * (vywz - vzwy) + uy * (vzwx - vxwz) + uz * (vxwy - vywx);
    let perm = ux.abs() * (vywz.abs() + vzwy.abs())
        + uy.abs() * (vzwx.abs() + vxwz.abs())
        + uz.abs() * (vxwy.abs() + vywx.abs());
    (det, perm)
}

/// Filtered orientation sign; `None` when the estimate is not certified.
#[inline]
pub fn orient3d_fast(a: Point3, b: Point3, c: Point3, d: Point3) -> Option<Sign> {
    let (det, perm) = orient3d_estimate(a, b, c, d);
    let bound = O3D_BOUND_A * perm;
    if det > bound {
        Some(Sign::Positive)
    } else if -det > bound {
        Some(Sign::Negative)
    } else {
        None
    }
}

fn diff_row(p: Point3, a: Point3) -> [Expansion; 3] {
    [Expansion::diff(p.x, a.x), Expansion::diff(p.y, a.y), Expansion::diff(p.z, a.z)]
}

/// Exact value of the orientation determinant.
pub fn orient3d_exact_value(a: Point3, b: Point3, c: Point3, d: Point3) -> Expansion {
    det3(&diff_row(b, a), &diff_row(c, a), &diff_row(d, a))
}

/// Orientation sign computed entirely in exact arithmetic.
pub fn orient3d_exact(a: Point3, b: Point3, c: Point3, d: Point3) -> Sign {
    orient3d_exact_value(a, b, c, d).sign()
}

/// Sign of `(b - a) . ((c - a) x (d - a))`.
#[inline]
pub fn orient3d(a: Point3, b: Point3, c: Point3, d: Point3) -> Sign {
    match orient3d_fast(a, b, c, d) {
        Some(s) => s,
        None => orient3d_exact(a, b, c, d),
    }
}

/// Whether three points lie on a common line, decided exactly.
pub fn collinear(a: Point3, b: Point3, c: Point3) -> bool {
    let u = [b.x - a.x, b.y - a.y, b.z - a.z];
    let v = [c.x - a.x, c.y - a.y, c.z - a.z];
    let cross_fast = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let scale = u.iter().chain(v.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    if cross_fast.iter().any(|c| c.abs() > 16.0 * EPS * scale * scale) {
        return false;
    }
    let u = diff_row(b, a);
    let v = diff_row(c, a);
    let comp = |i: usize, j: usize| u[i].mul(&v[j]).sub(&u[j].mul(&v[i]));
    comp(1, 2).is_empty() && comp(2, 0).is_empty() && comp(0, 1).is_empty()
}

#[inline]
fn in_sphere_estimate(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> (f64, f64) {
    let (aex, aey, aez) = (a.x - e.x, a.y - e.y, a.z - e.z);
    let (bex, bey, bez) = (b.x - e.x, b.y - e.y, b.z - e.z);
    let (cex, cey, cez) = (c.x - e.x, c.y - e.y, c.z - e.z);
    let (dex, dey, dez) = (d.x - e.x, d.y - e.y, d.z - e.z);

    let aexbey = aex * bey;
    let bexaey = bex * aey;
    let ab = aexbey - bexaey;
    let bexcey = bex * cey;
    let cexbey = cex * bey;
    let bc = bexcey - cexbey;
    let cexdey = cex * dey;
    let dexcey = dex * cey;
    let cd = cexdey - dexcey;
    let dexaey = dex * aey;
    let aexdey = aex * dey;
    let da = dexaey - aexdey;
    let aexcey = aex * cey;
    let cexaey = cex * aey;
    let ac = aexcey - cexaey;
    let bexdey = bex * dey;
    let dexbey = dex * bey;
    let bd = bexdey - dexbey;

    let abc = aez * bc - bez * ac + cez * ab;
    let bcd = bez * cd - cez * bd + dez * bc;
    let cda = cez * da + dez * ac + aez * cd;
    let dab = dez * ab + aez * bd + bez * da;

    let alift = aex * aex + aey * aey + aez * aez;
    let blift = bex * bex + bey * bey + bez * bez;
    let clift = cex * cex + cey * cey + cez * cez;
    let dlift = dex * dex + dey * dey + dez * dez;

    let det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

    let (aezp, bezp, cezp, dezp) = (aez.abs(), bez.abs(), cez.abs(), dez.abs());
    let perm = ((cexdey.abs() + dexcey.abs()) * bezp
        + (dexbey.abs() + bexdey.abs()) * cezp
        + (bexcey.abs() + cexbey.abs()) * dezp)
        * alift
        + ((dexaey.abs() + aexdey.abs()) * cezp
            + (aexcey.abs() + cexaey.abs()) * dezp
            + (cexdey.abs() + dexcey.abs()) * aezp)
            * blift
        + ((aexbey.abs() + bexaey.abs()) * dezp
            + (bexdey.abs() + dexbey.abs()) * aezp
            + (dexaey.abs() + aexdey.abs()) * bezp)
            * clift
        + ((bexcey.abs() + cexbey.abs()) * aezp
            + (cexaey.abs() + aexcey.abs()) * bezp
            + (aexbey.abs() + bexaey.abs()) * cezp)
            * dlift;
    // `det` is the lifted 5x5 determinant, negative for points inside the
    // sphere of a positively oriented tetrahedron.
    (-det, perm)
}

/// Filtered in-sphere sign; `None` when the estimate is not certified.
#[inline]
pub fn in_sphere_fast(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> Option<Sign> {
    let (v, perm) = in_sphere_estimate(a, b, c, d, e);
    let bound = ISP_BOUND_A * perm;
    if v > bound {
        Some(Sign::Positive)
    } else if -v > bound {
        Some(Sign::Negative)
    } else {
        None
    }
}

/// In-sphere sign computed entirely in exact arithmetic.
pub fn in_sphere_exact(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> Sign {
    let lift = |r: &[Expansion; 3]| r[0].mul(&r[0]).add(&r[1].mul(&r[1])).add(&r[2].mul(&r[2]));
    let rb = diff_row(b, a);
    let rc = diff_row(c, a);
    let rd = diff_row(d, a);
    let re = diff_row(e, a);
    let det = lift(&rb)
        .mul(&det3(&rc, &rd, &re))
        .neg()
        .add(&lift(&rc).mul(&det3(&rb, &rd, &re)))
        .sub(&lift(&rd).mul(&det3(&rb, &rc, &re)))
        .add(&lift(&re).mul(&det3(&rb, &rc, &rd)));
    det.sign().flip()
}

/// Whether `e` lies inside (Positive), on (Zero) or outside (Negative) the
/// circumsphere of the positively oriented tetrahedron `abcd`.
#[inline]
pub fn in_sphere(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> Sign {
    match in_sphere_fast(a, b, c, d, e) {
        Some(s) => s,
        None => in_sphere_exact(a, b, c, d, e),
    }
}

/// Signature of the point that lies exactly on a tested sphere or plane when
/// it coincides with one of the tetrahedron's vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DuplicatePoint {
    pub existing: u32,
    pub incoming: u32,
}

/// In-sphere test with symbolic perturbation: never returns [`Sign::Zero`].
///
/// Each point `i` is lifted to `|p_i|^2 + eps^(r_i)` where `r_i` is the rank
/// of its index in ascending order, so the lowest index carries the dominant
/// perturbation. The result depends only on coordinates and indices.
pub fn perturbed_in_sphere(pts: [Point3; 5], ids: [u32; 5]) -> Result<Sign, DuplicatePoint> {
    let s = in_sphere(pts[0], pts[1], pts[2], pts[3], pts[4]);
    if s != Sign::Zero {
        return Ok(s);
    }
    perturbed_tie_break(pts, ids)
}

/// Resolves an exactly cospherical configuration.
pub(crate) fn perturbed_tie_break(pts: [Point3; 5], ids: [u32; 5]) -> Result<Sign, DuplicatePoint> {
    for i in 0..4 {
        if pts[i].same_bits(&pts[4]) {
            return Err(DuplicatePoint { existing: ids[i], incoming: ids[4] });
        }
    }
    let mut rows = [0usize, 1, 2, 3, 4];
    rows.sort_unstable_by_key(|&r| ids[r]);
    for &r in &rows {
        let mut others = [Point3::ORIGIN; 4];
        let mut k = 0;
        for (j, p) in pts.iter().enumerate() {
            if j != r {
                others[k] = *p;
                k += 1;
            }
        }
        let mut cof = orient3d(others[0], others[1], others[2], others[3]);
        if r % 2 == 1 {
            cof = cof.flip();
        }
        // The lifted determinant moves by eps * cof; inside means negative.
        match cof {
            Sign::Zero => continue,
            s => return Ok(s.flip()),
        }
    }
    // Only reachable when all five points are coplanar, which violates the
    // positive-orientation precondition.
    debug_assert!(false, "perturbed_in_sphere on a flat tetrahedron");
    Ok(Sign::Negative)
}

/// The four tetrahedron-only minors of the translated in-sphere matrix.
///
/// With `u = b - a`, `v = c - a`, `w = d - a` and `|.|^2` the lifted column,
/// `s4 = det[u; v; w]` is six times the signed volume (positive for a
/// positively oriented tetrahedron) and
/// `-ex*s1 + ey*s2 - ez*s3 + |e - a|^2*s4` (with `ex = e.x - a.x`, etc.) is the
/// lifted determinant, negative when `e` is inside the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubDeterminants {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl SubDeterminants {
    #[inline]
    pub fn compute(a: Point3, b: Point3, c: Point3, d: Point3) -> Self {
        let u = b - a;
        let v = c - a;
        let w = d - a;
        let (qu, qv, qw) = (u.norm2(), v.norm2(), w.norm2());
        let det = |r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]| {
            r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
                + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
        };
        SubDeterminants {
            s1: det([u.y, u.z, qu], [v.y, v.z, qv], [w.y, w.z, qw]),
            s2: det([u.x, u.z, qu], [v.x, v.z, qv], [w.x, w.z, qw]),
            s3: det([u.x, u.y, qu], [v.x, v.y, qv], [w.x, w.y, qw]),
            s4: det([u.x, u.y, u.z], [v.x, v.y, v.z], [w.x, w.y, w.z]),
        }
    }

    /// The lifted determinant for query `e`, rounded.
    #[inline]
    pub fn lifted_det(&self, a: Point3, e: Point3) -> f64 {
        let (ex, ey, ez) = (e.x - a.x, e.y - a.y, e.z - a.z);
        -ex * self.s1 + ey * self.s2 - ez * self.s3 + (ex * ex + ey * ey + ez * ez) * self.s4
    }

    /// Negated minors, the form stored per tetrahedron by the mesh.
    #[inline]
    pub fn negated(&self) -> [f64; 4] {
        [-self.s1, -self.s2, -self.s3, -self.s4]
    }
}

/// Error bounds precomputed from the extent of the input.
///
/// Valid for any query whose coordinate differences are bounded by the box
/// extent, i.e. for points inside the box the filter was built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticFilter {
    orient: f64,
    in_sphere: f64,
    cached: f64,
    extent: f64,
}

impl StaticFilter {
    /// Bounds for points whose pairwise coordinate differences never exceed
    /// `extent`.
    pub fn new(extent: f64) -> Self {
        // Inflate to absorb the rounding of the differences themselves.
        let l = extent * (1.0 + 1e-12);
        let l2 = l * l;
        let l3 = l2 * l;
        let l5 = l3 * l2;
        StaticFilter {
            orient: O3D_BOUND_A * 6.0 * l3 * 1.001,
            in_sphere: ISP_BOUND_A * 72.0 * l5 * 1.001,
            cached: CACHED_BOUND * l5,
            extent: l,
        }
    }

    /// A filter that never certifies anything; every call takes the dynamic
    /// path.
    pub const fn disabled() -> Self {
        StaticFilter { orient: f64::INFINITY, in_sphere: f64::INFINITY, cached: f64::INFINITY, extent: 0.0 }
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    #[inline]
    pub fn orient3d(&self, a: Point3, b: Point3, c: Point3, d: Point3) -> Sign {
        let (det, _) = orient3d_estimate(a, b, c, d);
        if det > self.orient {
            Sign::Positive
        } else if -det > self.orient {
            Sign::Negative
        } else {
            orient3d(a, b, c, d)
        }
    }

    #[inline]
    pub fn in_sphere(&self, a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> Sign {
        let (v, perm) = in_sphere_estimate(a, b, c, d, e);
        if v > self.in_sphere {
            return Sign::Positive;
        }
        if -v > self.in_sphere {
            return Sign::Negative;
        }
        let bound = ISP_BOUND_A * perm;
        if v > bound {
            Sign::Positive
        } else if -v > bound {
            Sign::Negative
        } else {
            in_sphere_exact(a, b, c, d, e)
        }
    }

    /// Cached in-sphere estimate from negated minors: `Some` when certified.
    #[inline]
    pub fn in_sphere_from_negated(&self, neg: &[f64; 4], a: Point3, e: Point3) -> Option<Sign> {
        let (ex, ey, ez) = (e.x - a.x, e.y - a.y, e.z - a.z);
        let v = -ex * neg[0] + ey * neg[1] - ez * neg[2] + (ex * ex + ey * ey + ez * ez) * neg[3];
        if v > self.cached {
            Some(Sign::Positive)
        } else if -v > self.cached {
            Some(Sign::Negative)
        } else {
            None
        }
    }
}

/// In-sphere test from cached minors of the tetrahedron `tet` (whose first
/// vertex is the translation origin); falls back to [`in_sphere`] when the
/// cached estimate cannot be certified.
pub fn in_sphere_cached(sub: &SubDeterminants, tet: &[Point3; 4], e: Point3) -> Sign {
    let mut lo = e;
    let mut hi = e;
    for p in tet {
        lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let ext = hi - lo;
    let filter = StaticFilter::new(ext.x.max(ext.y).max(ext.z));
    match filter.in_sphere_from_negated(&sub.negated(), tet[0], e) {
        Some(s) => s,
        None => in_sphere(tet[0], tet[1], tet[2], tet[3], e),
    }
}

/// Exact products used by tests that build their own exact determinants.
#[doc(hidden)]
pub fn exact_product(a: f64, b: f64) -> (f64, f64) {
    two_product(a, b)
}

#[doc(hidden)]
pub fn exact_diff(a: f64, b: f64) -> (f64, f64) {
    two_diff(a, b)
}

impl From<DuplicatePoint> for Error {
    fn from(d: DuplicatePoint) -> Self {
        Error::DuplicatePoint { existing: d.existing, incoming: d.incoming }
    }
}
