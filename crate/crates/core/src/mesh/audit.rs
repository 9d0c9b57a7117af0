//! Structural and geometric consistency checks.

use alloc::vec;
use alloc::vec::Vec;

use super::{MeshStore, VertexId, FACET, GHOST};
use crate::predicates::{in_sphere, orient3d, Sign};

/// How much of the Delaunay property to verify.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelaunayCheck {
    Skip,
    /// Every interior facet is locally Delaunay. Together with a convex hull
    /// this implies the global property.
    Local,
    /// Local check plus every real tetrahedron against every vertex, when
    /// the mesh has at most `max_vertices` vertices.
    Exhaustive {
        max_vertices: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuditOptions {
    pub delaunay: DelaunayCheck,
    /// Test every vertex against every hull facet, not only neighbors.
    pub hull_full: bool,
    /// Allow vertices that are not in the mesh yet; the quadratic checks
    /// then only consider inserted vertices.
    pub partial: bool,
}

impl AuditOptions {
    /// Adjacency, orientation and hull structure only.
    pub fn structure() -> Self {
        AuditOptions { delaunay: DelaunayCheck::Skip, hull_full: false, partial: false }
    }

    /// Structure plus the local Delaunay check; linear time.
    pub fn local() -> Self {
        AuditOptions { delaunay: DelaunayCheck::Local, hull_full: false, partial: false }
    }

    /// Everything, with the quadratic checks capped at 5000 vertices.
    pub fn full() -> Self {
        AuditOptions { delaunay: DelaunayCheck::Exhaustive { max_vertices: 5000 }, hull_full: true, partial: false }
    }

    #[must_use]
    pub fn partial(mut self) -> Self {
        self.partial = true;
        self
    }
}

/// Counts gathered by a successful audit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub real_tets: usize,
    pub ghost_tets: usize,
    pub exhaustive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("mesh has no live tetrahedra")]
    Empty,
    #[error("tetrahedron {tet} references vertex {vertex}, which does not exist")]
    BadVertex { tet: u64, vertex: VertexId },
    #[error("neighbor slot {slot} points at a missing or deleted tetrahedron")]
    DanglingNeighbor { slot: u64 },
    #[error("neighbor slot {slot} is not reciprocated")]
    NotReciprocal { slot: u64 },
    #[error("facet at slot {slot} does not match the facet of its neighbor")]
    FacetMismatch { slot: u64 },
    #[error("tetrahedron {tet} is not positively oriented")]
    Orientation { tet: u64 },
    #[error("ghost tetrahedron {tet} has a malformed hull facet")]
    GhostShape { tet: u64 },
    #[error("hull is not convex at ghost tetrahedron {tet}: vertex {vertex} lies beyond it")]
    HullNotConvex { tet: u64, vertex: VertexId },
    #[error("vertex {vertex} belongs to no tetrahedron")]
    Isolated { vertex: VertexId },
    #[error("vertex {vertex} lies inside the circumsphere of tetrahedron {tet}")]
    NotDelaunay { tet: u64, vertex: VertexId },
    #[error("free pool entry {tet} is live or repeated")]
    FreePool { tet: u64 },
}

fn facet_set(t: &[VertexId; 4], i: usize) -> [VertexId; 3] {
    let mut k = [t[FACET[i][0]], t[FACET[i][1]], t[FACET[i][2]]];
    k.sort_unstable();
    k
}

/// Runs the requested checks, stopping at the first violation.
pub fn audit(m: &MeshStore, opts: &AuditOptions) -> Result<AuditReport, AuditError> {
    let n = m.num_vertices() as u64;
    let slots = m.tet_slots();
    let mut report = AuditReport::default();
    let mut referenced = vec![false; m.num_vertices()];

    for t in m.live_tets() {
        let v = m.tet(t);
        let ghosts = v.iter().filter(|&&x| x == GHOST).count();
        for &x in &v {
            if x != GHOST && u64::from(x) >= n {
                return Err(AuditError::BadVertex { tet: t, vertex: x });
            }
            if x != GHOST {
                referenced[x as usize] = true;
            }
        }
        match ghosts {
            0 => {
                report.real_tets += 1;
                let p = v.map(|x| m.point(x));
                if orient3d(p[0], p[1], p[2], p[3]) != Sign::Positive {
                    return Err(AuditError::Orientation { tet: t });
                }
            }
            1 => report.ghost_tets += 1,
            _ => return Err(AuditError::GhostShape { tet: t }),
        }
        for i in 0..4u64 {
            let slot = 4 * t + i;
            let r = m.neighbor(slot);
            if r == u64::MAX || (r >> 2) >= slots || m.is_deleted(r >> 2) || (r >> 2) == t {
                return Err(AuditError::DanglingNeighbor { slot });
            }
            if m.neighbor(r) != slot {
                return Err(AuditError::NotReciprocal { slot });
            }
            if facet_set(&v, i as usize) != facet_set(&m.tet(r >> 2), (r & 3) as usize) {
                return Err(AuditError::FacetMismatch { slot });
            }
        }
        if ghosts == 1 {
            let k = v.iter().position(|&x| x == GHOST).unwrap();
            let across = m.neighbor(4 * t + k as u64) >> 2;
            if m.is_ghost(across) {
                return Err(AuditError::GhostShape { tet: t });
            }
        }
    }
    if report.real_tets == 0 {
        return Err(AuditError::Empty);
    }
    for &s in m.skipped() {
        referenced[s as usize] = true;
    }
    if let Some(vertex) = referenced.iter().position(|&r| !r).filter(|_| !opts.partial) {
        return Err(AuditError::Isolated { vertex: vertex as VertexId });
    }

    let mut pooled = vec![false; slots as usize];
    for &t in m.free_pool() {
        if t >= slots || !m.is_deleted(t) || pooled[t as usize] {
            return Err(AuditError::FreePool { tet: t });
        }
        pooled[t as usize] = true;
    }

    check_hull(m, opts.hull_full, &referenced)?;

    match opts.delaunay {
        DelaunayCheck::Skip => {}
        DelaunayCheck::Local => check_local_delaunay(m)?,
        DelaunayCheck::Exhaustive { max_vertices } => {
            check_local_delaunay(m)?;
            if m.num_vertices() <= max_vertices {
                check_empty_spheres(m, &referenced)?;
                report.exhaustive = true;
            }
        }
    }
    Ok(report)
}

/// Ghost vertex replaced by `q`: Positive when `q` is strictly beyond the
/// ghost's hull facet.
fn beyond(m: &MeshStore, g: &[VertexId; 4], q: VertexId) -> Sign {
    let p = g.map(|x| if x == GHOST { m.point(q) } else { m.point(x) });
    orient3d(p[0], p[1], p[2], p[3])
}

fn check_hull(m: &MeshStore, full: bool, inserted: &[bool]) -> Result<(), AuditError> {
    for g in m.live_tets().filter(|&t| m.is_ghost(t)) {
        let v = m.tet(g);
        for i in 0..4 {
            if v[i] == GHOST {
                continue;
            }
            // the neighbor across a facet containing the ghost vertex shares
            // a hull edge; its far hull vertex must not be beyond this facet
            let r = m.neighbor(4 * g + i as u64);
            let w = m.tet(r >> 2)[(r & 3) as usize];
            if w != GHOST && beyond(m, &v, w) == Sign::Positive {
                return Err(AuditError::HullNotConvex { tet: g, vertex: w });
            }
        }
        if full {
            for q in 0..m.num_vertices() as VertexId {
                if inserted[q as usize] && beyond(m, &v, q) == Sign::Positive {
                    return Err(AuditError::HullNotConvex { tet: g, vertex: q });
                }
            }
        }
    }
    Ok(())
}

fn check_local_delaunay(m: &MeshStore) -> Result<(), AuditError> {
    for t in m.real_tets() {
        let v = m.tet(t);
        let p = v.map(|x| m.point(x));
        for i in 0..4u64 {
            let r = m.neighbor(4 * t + i);
            let w = m.tet(r >> 2)[(r & 3) as usize];
            if w == GHOST {
                continue;
            }
            if in_sphere(p[0], p[1], p[2], p[3], m.point(w)) == Sign::Positive {
                return Err(AuditError::NotDelaunay { tet: t, vertex: w });
            }
        }
    }
    Ok(())
}

fn check_empty_spheres(m: &MeshStore, inserted: &[bool]) -> Result<(), AuditError> {
    let n = m.num_vertices() as VertexId;
    for t in m.real_tets() {
        let v = m.tet(t);
        let p = v.map(|x| m.point(x));
        for q in 0..n {
            if v.contains(&q) || !inserted[q as usize] {
                continue;
            }
            if in_sphere(p[0], p[1], p[2], p[3], m.point(q)) == Sign::Positive {
                return Err(AuditError::NotDelaunay { tet: t, vertex: q });
            }
        }
    }
    Ok(())
}

/// Hull facets as sorted vertex triples, sorted.
pub fn hull_facets(m: &MeshStore) -> Vec<[VertexId; 3]> {
    let mut out: Vec<[VertexId; 3]> = m
        .live_tets()
        .filter(|&t| m.is_ghost(t))
        .map(|g| {
            let v = m.tet(g);
            let mut f = [0; 3];
            let mut k = 0;
            for x in v {
                if x != GHOST {
                    f[k] = x;
                    k += 1;
                }
            }
            f.sort_unstable();
            f
        })
        .collect();
    out.sort_unstable();
    out
}
