use super::{TetStore, Workspace, LOOKUP_SIDE};
use crate::mesh::{color, VertexId, GHOST};
use crate::Result;

/// Local index of `v` among the cavity's boundary vertices.
#[inline]
fn local_index<S: TetStore>(s: &mut S, ws: &mut Workspace, v: VertexId) -> u32 {
    if v != GHOST {
        if let Some(aux) = s.vertex_scratch(v) {
            if (*aux >> 32) as u32 == ws.stamp {
                return *aux as u32;
            }
            let i = ws.locals.len() as u32;
            *aux = (u64::from(ws.stamp) << 32) | u64::from(i);
            ws.locals.push(v);
            return i;
        }
    }
    match ws.locals.iter().position(|&x| x == v) {
        Some(i) => i as u32,
        None => {
            ws.locals.push(v);
            (ws.locals.len() - 1) as u32
        }
    }
}

/// Replaces the cavity by one tetrahedron `(p, facet)` per boundary facet and
/// links everything up. Returns the first new tetrahedron.
pub(super) fn retriangulate<S: TetStore>(s: &mut S, ws: &mut Workspace, pid: VertexId) -> Result<u64> {
    ws.stamp = ws.stamp.wrapping_add(1);
    if ws.stamp == 0 {
        // scratch words start at zero, so stamp zero is never valid
        ws.stamp = 1;
    }
    ws.locals.clear();
    ws.facet_locals.clear();
    for k in 0..ws.boundary.len() {
        let f = ws.boundary[k].v;
        let idx = [local_index(s, ws, f[0]), local_index(s, ws, f[1]), local_index(s, ws, f[2])];
        ws.facet_locals.push(idx);
    }

    let region = s.color(ws.deleted[0]) & color::REGION;
    let nf = ws.boundary.len();
    ws.created.clear();
    for k in 0..nf {
        let t = match ws.deleted.get(k) {
            Some(&t) => t,
            None => s.take_tet()?,
        };
        ws.created.push(t);
    }
    for k in nf..ws.deleted.len() {
        s.release_tet(ws.deleted[k]);
    }

    for k in 0..nf {
        let f = ws.boundary[k];
        let t = ws.created[k];
        let c = if f.constrained { region | color::facet_flag(0) } else { region };
        s.write_tet(t, [pid, f.v[0], f.v[1], f.v[2]], c);
        s.set_neighbor(4 * t, f.outside);
        s.set_neighbor(f.outside, 4 * t);
    }

    let n = ws.locals.len();
    if n <= LOOKUP_SIDE {
        for k in 0..nf {
            let [i1, i2, i3] = ws.facet_locals[k].map(|x| x as usize);
            let t = ws.created[k];
            ws.lookup[i2 * LOOKUP_SIDE + i3] = 4 * t + 1;
            ws.lookup[i3 * LOOKUP_SIDE + i1] = 4 * t + 2;
            ws.lookup[i1 * LOOKUP_SIDE + i2] = 4 * t + 3;
        }
        for k in 0..nf {
            let [i1, i2, i3] = ws.facet_locals[k].map(|x| x as usize);
            let t = ws.created[k];
            s.set_neighbor(4 * t + 1, ws.lookup[i3 * LOOKUP_SIDE + i2]);
            s.set_neighbor(4 * t + 2, ws.lookup[i1 * LOOKUP_SIDE + i3]);
            s.set_neighbor(4 * t + 3, ws.lookup[i2 * LOOKUP_SIDE + i1]);
        }
    } else {
        ws.stats.lookup_fallbacks += 1;
        link_by_search(s, ws);
    }

    for k in 0..nf {
        let f = ws.boundary[k].v;
        s.created(ws.created[k], [pid, f[0], f[1], f[2]]);
    }
    ws.stats.deleted += ws.deleted.len() as u64;
    ws.stats.created += nf as u64;
    ws.deleted.clear();
    Ok(ws.created[0])
}

/// Links the new tetrahedra by scanning for the reversed boundary edge.
fn link_by_search<S: TetStore>(s: &mut S, ws: &mut Workspace) {
    let nf = ws.boundary.len();
    let edge = |k: usize, j: usize| {
        let [a, b, c] = ws.facet_locals[k];
        match j {
            1 => (b, c),
            2 => (c, a),
            _ => (a, b),
        }
    };
    for k in 0..nf {
        for j in 1..4 {
            let (a, b) = edge(k, j);
            let mut found = None;
            'search: for k2 in 0..nf {
                for j2 in 1..4 {
                    if edge(k2, j2) == (b, a) {
                        found = Some(4 * ws.created[k2] + j2 as u64);
                        break 'search;
                    }
                }
            }
            let partner = found.expect("cavity boundary is not a closed surface");
            s.set_neighbor(4 * ws.created[k] + j as u64, partner);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BoundaryFacet;
    use crate::mesh::{audit, AuditOptions, MeshStore, ScratchMode};
    use crate::Point3;
    use alloc::vec::Vec;

    /// A convex polyhedron around the origin whose boundary has `2v - 4`
    /// triangles over `v` vertices; removing its triangulation from a
    /// mesh and re-inserting the center exercises the linear search path.
    fn fan_cavity(ring: usize) -> (MeshStore, Vec<[u32; 4]>) {
        // bipyramid: two apexes plus a ring of `ring` points
        let mut pts = Vec::new();
        pts.push(Point3::new(0.0, 0.0, 0.0)); // center, inserted last
        pts.push(Point3::new(0.0, 0.0, 1.0));
        pts.push(Point3::new(0.0, 0.0, -1.0));
        for i in 0..ring {
            let a = core::f64::consts::TAU * i as f64 / ring as f64;
            pts.push(Point3::new(libm::cos(a), libm::sin(a), 0.01 * libm::sin(3.0 * a)));
        }
        // triangulate the bipyramid with tets spanning the axis
        let mut tets = Vec::new();
        for i in 0..ring {
            let a = 3 + i as u32;
            let b = 3 + ((i + 1) % ring) as u32;
            tets.push([1, 2, a, b]);
        }
        (MeshStore::from_tets(pts, &tets, ScratchMode::Colors).unwrap(), tets)
    }

    #[test]
    fn large_cavity_links_through_search() {
        let ring = 35; // 37 boundary vertices, 70 facets
        let (mut m, _) = fan_cavity(ring);
        audit(&m, &AuditOptions::structure().partial()).unwrap();
        let mut ws = Workspace::new(1);
        // cavity = every real tet
        let real: Vec<u64> = m.real_tets().collect();
        for &t in &real {
            m.mark_deleted(t);
            ws.deleted.push(t);
        }
        for &t in &real {
            let v = m.tet(t);
            for i in 0..4 {
                let r = m.neighbor(4 * t + i as u64);
                if !m.is_deleted(r >> 2) {
                    let f = crate::mesh::FACET[i];
                    ws.boundary.push(BoundaryFacet {
                        v: [v[f[0]], v[f[1]], v[f[2]]],
                        outside: r,
                        inside: 4 * t + i as u64,
                        constrained: false,
                    });
                }
            }
        }
        assert_eq!(ws.boundary.len(), 2 * (ring + 2) - 4);
        retriangulate(&mut m, &mut ws, 0).unwrap();
        assert_eq!(ws.stats.lookup_fallbacks, 1);
        assert_eq!(m.real_tet_count(), 2 * (ring + 2) - 4);
        audit(&m, &AuditOptions::structure()).unwrap();
    }
}
