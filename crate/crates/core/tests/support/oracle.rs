//! Reference Delaunay and convex-hull constructions over exact predicates.

use std::collections::{BTreeSet, HashSet, VecDeque};

use super::exact::{in_sphere_fast, orient_fast};
use tetforge_core::Point3;

fn sorted4(mut t: [u32; 4]) -> [u32; 4] {
    t.sort_unstable();
    t
}

/// Every 4-subset that is non-flat and has no point strictly inside its
/// circumsphere. Exact in general position.
pub fn brute_delaunay(p: &[Point3]) -> Vec<[u32; 4]> {
    let n = p.len() as u32;
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let (pa, pb, pc, pd) = (p[a as usize], p[b as usize], p[c as usize], p[d as usize]);
                    let o = orient_fast(pa, pb, pc, pd);
                    if o == 0 {
                        continue;
                    }
                    let (pc, pd) = if o > 0 { (pc, pd) } else { (pd, pc) };
                    let empty = (0..n)
                        .filter(|&e| e != a && e != b && e != c && e != d)
                        .all(|e| in_sphere_fast(pa, pb, pc, pd, p[e as usize]) <= 0);
                    if empty {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Delaunay tetrahedra by facet wrapping: from one Delaunay tetrahedron,
/// every facet is matched with the apex whose sphere through the facet is
/// empty on the far side. Runs in O(T n) predicate calls.
pub fn wrap_delaunay(p: &[Point3]) -> Vec<[u32; 4]> {
    let n = p.len() as u32;
    let pt = |i: u32| p[i as usize];
    let seed = seed_tet(p);
    let mut tets: BTreeSet<[u32; 4]> = BTreeSet::new();
    let mut queue = VecDeque::new();
    tets.insert(sorted4(seed));
    queue.push_back(seed);
    // facets as (f0, f1, f2) with the tet on the positive side of
    // orient(f0, f1, f2, x)
    const FACETS: [[usize; 4]; 4] = [[2, 1, 3, 0], [0, 2, 3, 1], [0, 3, 1, 2], [0, 1, 2, 3]];
    while let Some(t) = queue.pop_front() {
        for f in FACETS {
            let (a, b, c, own) = (t[f[0]], t[f[1]], t[f[2]], t[f[3]]);
            debug_assert!(orient_fast(pt(a), pt(b), pt(c), pt(own)) > 0);
            let mut best: Option<u32> = None;
            for e in 0..n {
                if e == a || e == b || e == c {
                    continue;
                }
                if orient_fast(pt(a), pt(b), pt(c), pt(e)) >= 0 {
                    continue;
                }
                best = match best {
                    None => Some(e),
                    // (a, c, b, best) is positive; replace when e is inside
                    Some(x) if in_sphere_fast(pt(a), pt(c), pt(b), pt(x), pt(e)) > 0 => Some(e),
                    keep => keep,
                };
            }
            if let Some(e) = best {
                let nt = [a, c, b, e];
                if tets.insert(sorted4(nt)) {
                    queue.push_back(nt);
                }
            }
        }
    }
    tets.into_iter().collect()
}

/// A positively oriented Delaunay tetrahedron incident to the first point.
fn seed_tet(p: &[Point3]) -> [u32; 4] {
    let n = p.len() as u32;
    let pt = |i: u32| p[i as usize];
    let mut by_dist: Vec<u32> = (1..n).collect();
    by_dist.sort_by(|&x, &y| pt(0).dist2(pt(x)).total_cmp(&pt(0).dist2(pt(y))));
    for (i, &b) in by_dist.iter().enumerate() {
        for (j, &c) in by_dist.iter().enumerate().skip(i + 1) {
            for &d in by_dist.iter().skip(j + 1) {
                let o = orient_fast(pt(0), pt(b), pt(c), pt(d));
                if o == 0 {
                    continue;
                }
                let t = if o > 0 { [0, b, c, d] } else { [0, b, d, c] };
                let empty = (1..n)
                    .filter(|e| !t.contains(e))
                    .all(|e| in_sphere_fast(pt(t[0]), pt(t[1]), pt(t[2]), pt(t[3]), pt(e)) <= 0);
                if empty {
                    return t;
                }
            }
        }
    }
    panic!("no Delaunay tetrahedron found");
}

/// Convex-hull facets (sorted vertex triples) by gift wrapping. Assumes no
/// four hull points are coplanar.
pub fn wrap_hull(p: &[Point3]) -> Vec<[u32; 3]> {
    let n = p.len() as u32;
    let pt = |i: u32| p[i as usize];
    // lexicographic minimum is a hull vertex
    let a = (0..n)
        .min_by(|&x, &y| {
            let (u, v) = (pt(x), pt(y));
            u.x.total_cmp(&v.x).then(u.y.total_cmp(&v.y)).then(u.z.total_cmp(&v.z))
        })
        .unwrap();
    // wrap around a vertical line through a: find b so that the vertical
    // plane through a and b has every point on one side
    let up = pt(a) + Point3::new(0.0, 0.0, 1.0);
    let side = |x: Point3, y: Point3, z: Point3, w: Point3| orient_fast(x, y, z, w);
    let mut b = if a == 0 { 1 } else { 0 };
    for e in 0..n {
        if e == a || e == b {
            continue;
        }
        if side(pt(a), up, pt(b), pt(e)) < 0 {
            b = e;
        }
    }
    // wrap around edge ab starting from the vertical plane
    let mut c = u32::MAX;
    for e in 0..n {
        if e == a || e == b {
            continue;
        }
        if c == u32::MAX || side(pt(a), pt(b), pt(c), pt(e)) < 0 {
            c = e;
        }
    }
    // facet (a, b, c) now has every point on its non-negative side
    let mut facets: HashSet<[u32; 3]> = HashSet::new();
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::new();
    queue.push_back([a, b, c]);
    while let Some(f) = queue.pop_front() {
        let mut key = f;
        key.sort_unstable();
        if !out.insert(key) {
            continue;
        }
        facets.insert(f);
        for k in 0..3 {
            // edge (x, y) of f; the neighbor facet uses it as (y, x)
            let (x, y) = (f[k], f[(k + 1) % 3]);
            let mut best = f[(k + 2) % 3];
            for e in 0..n {
                if e == x || e == y || e == best {
                    continue;
                }
                if side(pt(y), pt(x), pt(best), pt(e)) < 0 {
                    best = e;
                }
            }
            queue.push_back([y, x, best]);
        }
    }
    out.into_iter().collect()
}
