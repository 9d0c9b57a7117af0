use rand::RngCore;

use super::{ghost_position, TetStore, Workspace};
use crate::geom::Point3;
use crate::predicates::{Sign, StaticFilter};

/// Visibility walk from `start` toward `p`.
///
/// Returns a real tetrahedron whose closure contains `p`, or the ghost
/// tetrahedron entered when `p` lies beyond the hull. Facets are tried from a
/// random starting position, which guarantees termination. `None` means the
/// walk stepped onto a tetrahedron the store does not admit.
pub fn walk<S: TetStore>(s: &S, ws: &mut Workspace, filter: &StaticFilter, start: u64, p: Point3) -> Option<u64> {
    let mut t = start;
    if !s.admits(t) {
        return None;
    }
    if let Some(k) = ghost_position(&s.tet(t)) {
        t = s.neighbor(4 * t + k as u64) >> 2;
        if !s.admits(t) {
            return None;
        }
    }
    ws.stats.walks += 1;
    // facet we entered through, known not to see p
    let mut entry = 4usize;
    loop {
        let v = s.tet(t);
        if ghost_position(&v).is_some() {
            return Some(t);
        }
        let q = v.map(|x| s.point(x));
        let r = (ws.rng.next_u32() & 3) as usize;
        let mut next = None;
        for k in 0..4 {
            let i = (r + k) & 3;
            if i == entry {
                continue;
            }
            let mut w = q;
            w[i] = p;
            if filter.orient3d(w[0], w[1], w[2], w[3]) == Sign::Negative {
                next = Some(s.neighbor(4 * t + i as u64));
                break;
            }
        }
        match next {
            None => return Some(t),
            Some(r) => {
                t = r >> 2;
                entry = (r & 3) as usize;
                ws.stats.walk_steps += 1;
                if !s.admits(t) {
                    return None;
                }
            }
        }
    }
}
