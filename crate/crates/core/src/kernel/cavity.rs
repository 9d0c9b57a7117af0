use super::{ghost_position, Abort, BoundaryFacet, Rules, TetStore, Workspace};
use crate::geom::Point3;
use crate::mesh::{color, VertexId, FACET, GHOST};
use crate::predicates::{perturbed_tie_break, Sign, StaticFilter};

pub(super) enum Stop {
    Duplicate(VertexId),
    Abort(Abort),
}

impl From<Abort> for Stop {
    fn from(a: Abort) -> Self {
        Stop::Abort(a)
    }
}

fn real_conflict<S: TetStore>(s: &S, filter: &StaticFilter, t: u64, p: Point3, pid: VertexId) -> Result<bool, Stop> {
    if s.in_cavity(t) {
        return Ok(true);
    }
    let v = s.tet(t);
    let a = s.point(v[0]);
    if let Some(neg) = s.minors(t) {
        if let Some(sign) = filter.in_sphere_from_negated(&neg, a, p) {
            return Ok(sign == Sign::Positive);
        }
    }
    let q = [a, s.point(v[1]), s.point(v[2]), s.point(v[3])];
    match filter.in_sphere(q[0], q[1], q[2], q[3], p) {
        Sign::Zero => perturbed_tie_break([q[0], q[1], q[2], q[3], p], [v[0], v[1], v[2], v[3], pid])
            .map(|s| s == Sign::Positive)
            .map_err(|d| Stop::Duplicate(d.existing)),
        sign => Ok(sign == Sign::Positive),
    }
}

/// Whether tetrahedron `t` is in conflict with `p` (vertex `pid`).
///
/// A real tetrahedron conflicts when `p` is inside its circumsphere, with
/// exact ties broken by symbolic perturbation. A ghost conflicts when `p` is
/// strictly beyond its hull facet, or on the facet's plane and inside the
/// circumsphere of the real tetrahedron behind the facet.
pub fn conflicts<S: TetStore>(
    s: &S,
    filter: &StaticFilter,
    t: u64,
    p: Point3,
    pid: VertexId,
) -> Result<bool, Option<VertexId>> {
    conflict(s, filter, t, p, pid).map_err(|e| match e {
        Stop::Duplicate(v) => Some(v),
        Stop::Abort(_) => None,
    })
}

fn conflict<S: TetStore>(s: &S, filter: &StaticFilter, t: u64, p: Point3, pid: VertexId) -> Result<bool, Stop> {
    let v = s.tet(t);
    let Some(k) = ghost_position(&v) else {
        return real_conflict(s, filter, t, p, pid);
    };
    let q = v.map(|x| if x == GHOST { p } else { s.point(x) });
    match filter.orient3d(q[0], q[1], q[2], q[3]) {
        Sign::Positive => Ok(true),
        Sign::Negative => Ok(false),
        Sign::Zero => {
            let behind = s.neighbor(4 * t + k as u64) >> 2;
            if !s.admits(behind) {
                return Err(Abort::Cavity.into());
            }
            real_conflict(s, filter, behind, p, pid)
        }
    }
}

#[inline]
fn boundary_facet<S: TetStore>(s: &S, t: u64, v: &[VertexId; 4], i: usize) -> BoundaryFacet {
    let f = FACET[i];
    BoundaryFacet {
        v: [v[f[0]], v[f[1]], v[f[2]]],
        outside: s.neighbor(4 * t + i as u64),
        inside: 4 * t + i as u64,
        constrained: s.color(t) & color::facet_flag(i) != 0,
    }
}

/// Breadth-first cavity search from `start`, then the constrained repairs.
pub(super) fn build<S: TetStore>(
    s: &mut S,
    ws: &mut Workspace,
    filter: &StaticFilter,
    start: u64,
    pid: VertexId,
    p: Point3,
    rules: &Rules<'_>,
) -> Result<(), Stop> {
    ws.deleted.clear();
    ws.boundary.clear();
    s.mark(start);
    ws.deleted.push(start);
    let mut head = 0;
    while head < ws.deleted.len() {
        let t = ws.deleted[head];
        head += 1;
        let v = s.tet(t);
        let flags = if rules.respect_flags { s.color(t) & color::FLAGS } else { 0 };
        for i in 0..4 {
            let r = s.neighbor(4 * t + i as u64);
            let n = r >> 2;
            if s.in_cavity(n) {
                continue;
            }
            if !s.admits(n) {
                return Err(Abort::Cavity.into());
            }
            if flags & color::facet_flag(i) != 0 {
                ws.boundary.push(boundary_facet(s, t, &v, i));
                continue;
            }
            ws.stats.conflict_tests += 1;
            if conflict(s, filter, n, p, pid)? {
                s.mark(n);
                ws.deleted.push(n);
            } else {
                ws.boundary.push(boundary_facet(s, t, &v, i));
            }
        }
    }

    if rules.star_shaped || rules.respect_flags || rules.constrained_edge.is_some() {
        repair(s, ws, filter, start, p, rules)?;
    }
    let min_dist2 = rules.local_min_dist2.map_or(rules.min_dist2, |f| f(pid));
    if min_dist2 > 0.0 {
        for f in &ws.boundary {
            for &x in &f.v {
                if x != GHOST && s.point(x).dist2(p) < min_dist2 {
                    return Err(Abort::TooClose.into());
                }
            }
        }
    }
    Ok(())
}

fn recollect<S: TetStore>(s: &S, ws: &mut Workspace) {
    ws.boundary.clear();
    for &t in &ws.deleted {
        let v = s.tet(t);
        for i in 0..4 {
            if !s.in_cavity(s.neighbor(4 * t + i as u64) >> 2) {
                ws.boundary.push(boundary_facet(s, t, &v, i));
            }
        }
    }
}

const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Drops tetrahedra from the cavity until every boundary facet forms a
/// positive tetrahedron with `p` and no constrained facet or edge is interior.
fn repair<S: TetStore>(
    s: &mut S,
    ws: &mut Workspace,
    filter: &StaticFilter,
    start: u64,
    p: Point3,
    rules: &Rules<'_>,
) -> Result<(), Stop> {
    loop {
        let mut culprit = None;
        if rules.respect_flags {
            // a flagged facet reached around its edges: drop the far side,
            // the one found later by the search
            'flags: for (k, &t) in ws.deleted.iter().enumerate() {
                let flags = s.color(t) & color::FLAGS;
                if flags == 0 {
                    continue;
                }
                for i in 0..4 {
                    let n = s.neighbor(4 * t + i as u64) >> 2;
                    if flags & color::facet_flag(i) != 0 && s.in_cavity(n) {
                        let later = ws.deleted[k + 1..].contains(&n);
                        culprit = Some(if later { n } else { t });
                        break 'flags;
                    }
                }
            }
        }
        if culprit.is_none() && rules.star_shaped {
            for f in &ws.boundary {
                if f.v.contains(&GHOST) {
                    continue;
                }
                let q = f.v.map(|x| s.point(x));
                if filter.orient3d(p, q[0], q[1], q[2]) != Sign::Positive {
                    culprit = Some(f.inside >> 2);
                    break;
                }
            }
        }
        if culprit.is_none() {
            if let Some(edge) = rules.constrained_edge {
                'tets: for &t in &ws.deleted {
                    let v = s.tet(t);
                    for (a, b) in EDGES {
                        let (x, y) = (v[a], v[b]);
                        if x == GHOST || y == GHOST || !edge(x, y) {
                            continue;
                        }
                        let on_boundary = ws.boundary.iter().any(|f| f.v.contains(&x) && f.v.contains(&y));
                        if !on_boundary {
                            culprit = Some(t);
                            break 'tets;
                        }
                    }
                }
            }
        }
        let Some(t) = culprit else {
            return Ok(());
        };
        if t == start {
            return Err(Abort::NotStarShaped.into());
        }
        s.unmark(t);
        ws.deleted.retain(|&d| d != t);
        if rules.respect_flags {
            keep_connected(s, ws, start);
        }
        recollect(s, ws);
    }
}

/// Unmarks cavity tetrahedra no longer reachable from `start` through
/// unflagged facets.
fn keep_connected<S: TetStore>(s: &mut S, ws: &mut Workspace, start: u64) {
    let mut reached = alloc::vec![start];
    let mut head = 0;
    while head < reached.len() {
        let t = reached[head];
        head += 1;
        let flags = s.color(t) & color::FLAGS;
        for i in 0..4 {
            let n = s.neighbor(4 * t + i as u64) >> 2;
            if flags & color::facet_flag(i) == 0 && s.in_cavity(n) && !reached.contains(&n) {
                reached.push(n);
            }
        }
    }
    if reached.len() == ws.deleted.len() {
        return;
    }
    for &t in &ws.deleted {
        if !reached.contains(&t) {
            s.unmark(t);
        }
    }
    ws.deleted.retain(|t| reached.contains(t));
}
