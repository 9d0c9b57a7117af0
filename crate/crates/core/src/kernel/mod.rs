//! Incremental insertion: point location, cavity construction and cavity
//! retriangulation.
//!
//! The kernel is written against [`TetStore`] so the same code drives both the
//! exclusively owned [`MeshStore`] and the per-thread views of the parallel
//! mesh in the `tetforge` crate.

mod ball;
mod cavity;
mod triangulate;
mod walk;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;

pub use cavity::conflicts;
pub use triangulate::{triangulate, TriangulateOptions, TriangulationStats, Triangulator};
pub use walk::walk;

use crate::geom::Point3;
use crate::mesh::{color, MeshStore, VertexId, GHOST};
use crate::predicates::StaticFilter;
use crate::rng::SplitMix64;
use crate::Result;

/// Mesh access needed by the insertion kernel.
pub trait TetStore {
    fn point(&self, v: VertexId) -> Point3;
    fn tet(&self, t: u64) -> [VertexId; 4];
    fn neighbor(&self, slot: u64) -> u64;
    fn set_neighbor(&mut self, slot: u64, value: u64);

    /// Whether `t` belongs to the cavity currently being built by this caller.
    fn in_cavity(&self, t: u64) -> bool;
    fn mark(&mut self, t: u64);
    fn unmark(&mut self, t: u64);

    /// Whether this caller may read and modify `t`. A `false` aborts the
    /// insertion in progress.
    #[inline]
    fn admits(&self, _t: u64) -> bool {
        true
    }

    /// Cached negated in-sphere minors, if the store keeps them.
    fn minors(&self, t: u64) -> Option<[f64; 4]>;

    /// Color of a tetrahedron as it was before any cavity mark.
    fn color(&self, t: u64) -> u16;

    /// Fills slot `t`; the slot stops being deleted.
    fn write_tet(&mut self, t: u64, v: [VertexId; 4], color: u16);

    /// A deleted slot to fill, reused or freshly allocated.
    fn take_tet(&mut self) -> Result<u64>;

    /// Hands a deleted slot back for reuse.
    fn release_tet(&mut self, t: u64);

    /// Per-vertex scratch word, when the store offers one.
    #[inline]
    fn vertex_scratch(&mut self, _v: VertexId) -> Option<&mut u64> {
        None
    }

    /// Called once per created tetrahedron after an insertion is applied.
    #[inline]
    fn created(&mut self, _t: u64, _v: [VertexId; 4]) {}
}

impl TetStore for MeshStore {
    #[inline]
    fn point(&self, v: VertexId) -> Point3 {
        MeshStore::point(self, v)
    }

    #[inline]
    fn tet(&self, t: u64) -> [VertexId; 4] {
        MeshStore::tet(self, t)
    }

    #[inline]
    fn neighbor(&self, slot: u64) -> u64 {
        MeshStore::neighbor(self, slot)
    }

    #[inline]
    fn set_neighbor(&mut self, slot: u64, value: u64) {
        MeshStore::set_neighbor(self, slot, value);
    }

    #[inline]
    fn in_cavity(&self, t: u64) -> bool {
        self.is_deleted(t)
    }

    #[inline]
    fn mark(&mut self, t: u64) {
        self.mark_deleted(t);
    }

    #[inline]
    fn unmark(&mut self, t: u64) {
        self.unmark_deleted(t);
    }

    #[inline]
    fn minors(&self, t: u64) -> Option<[f64; 4]> {
        MeshStore::minors(self, t).copied()
    }

    #[inline]
    fn color(&self, t: u64) -> u16 {
        MeshStore::color(self, t) & !color::MARK
    }

    #[inline]
    fn write_tet(&mut self, t: u64, v: [VertexId; 4], c: u16) {
        MeshStore::write_tet(self, t, v, c);
    }

    #[inline]
    fn take_tet(&mut self) -> Result<u64> {
        MeshStore::take_tet(self)
    }

    #[inline]
    fn release_tet(&mut self, t: u64) {
        MeshStore::release_tet(self, t);
    }

    #[inline]
    fn vertex_scratch(&mut self, v: VertexId) -> Option<&mut u64> {
        Some(self.aux_mut(v))
    }
}

/// Why an insertion was abandoned without touching the mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Abort {
    /// Point location left the caller's territory.
    Walk,
    /// The cavity reached a tetrahedron the caller may not modify.
    Cavity,
    /// A cavity vertex lies closer than the allowed distance.
    TooClose,
    /// The cavity could not be made star-shaped around the point.
    NotStarShaped,
}

/// Result of one insertion attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insertion {
    /// Inserted; the payload is a new tetrahedron incident to the point.
    Inserted(u64),
    /// Exact duplicate of an existing vertex; nothing changed.
    Duplicate(VertexId),
    Aborted(Abort),
}

/// Extra rules for constrained insertion.
#[derive(Clone, Copy, Default)]
pub struct Rules<'a> {
    /// Do not cross facets flagged as constrained.
    pub respect_flags: bool,
    /// Shrink the cavity until every boundary facet sees the point.
    pub star_shaped: bool,
    /// Abort when a cavity vertex is within this squared distance.
    pub min_dist2: f64,
    /// Per-point squared distance replacing `min_dist2`.
    pub local_min_dist2: Option<&'a (dyn Fn(VertexId) -> f64 + Sync)>,
    /// Edges that must survive the insertion.
    pub constrained_edge: Option<&'a (dyn Fn(VertexId, VertexId) -> bool + Sync)>,
}

impl fmt::Debug for Rules<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rules")
            .field("respect_flags", &self.respect_flags)
            .field("star_shaped", &self.star_shaped)
            .field("min_dist2", &self.min_dist2)
            .field("local_min_dist2", &self.local_min_dist2.is_some())
            .field("constrained_edge", &self.constrained_edge.is_some())
            .finish()
    }
}

impl Rules<'_> {
    pub const DELAUNAY: Rules<'static> = Rules {
        respect_flags: false,
        star_shaped: false,
        min_dist2: 0.0,
        local_min_dist2: None,
        constrained_edge: None,
    };
}

/// Counters accumulated by the kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KernelStats {
    pub inserted: u64,
    pub duplicates: u64,
    pub walks: u64,
    pub walk_steps: u64,
    pub conflict_tests: u64,
    pub deleted: u64,
    pub created: u64,
    pub aborted_walk: u64,
    pub aborted_cavity: u64,
    pub aborted_close: u64,
    pub aborted_star: u64,
    /// Cavities with more boundary vertices than the lookup table holds.
    pub lookup_fallbacks: u64,
}

impl KernelStats {
    pub fn merge(&mut self, o: &KernelStats) {
        self.inserted += o.inserted;
        self.duplicates += o.duplicates;
        self.walks += o.walks;
        self.walk_steps += o.walk_steps;
        self.conflict_tests += o.conflict_tests;
        self.deleted += o.deleted;
        self.created += o.created;
        self.aborted_walk += o.aborted_walk;
        self.aborted_cavity += o.aborted_cavity;
        self.aborted_close += o.aborted_close;
        self.aborted_star += o.aborted_star;
        self.lookup_fallbacks += o.lookup_fallbacks;
    }

    pub fn mean_deleted(&self) -> f64 {
        self.deleted as f64 / self.inserted.max(1) as f64
    }

    pub fn mean_created(&self) -> f64 {
        self.created as f64 / self.inserted.max(1) as f64
    }

    pub fn mean_walk_steps(&self) -> f64 {
        self.walk_steps as f64 / self.walks.max(1) as f64
    }

    pub fn tests_per_created(&self) -> f64 {
        self.conflict_tests as f64 / self.created.max(1) as f64
    }
}

/// One cavity boundary facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFacet {
    /// Facet vertices, ordered so `(p, v0, v1, v2)` is positively oriented.
    pub v: [VertexId; 3],
    /// Facet slot of the tetrahedron outside the cavity.
    pub outside: u64,
    /// Facet slot of the cavity tetrahedron.
    pub inside: u64,
    pub constrained: bool,
}

/// Side length of the square adjacency lookup table.
pub const LOOKUP_SIDE: usize = 32;

/// Per-thread scratch reused across insertions.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub deleted: Vec<u64>,
    pub boundary: Vec<BoundaryFacet>,
    lookup: Vec<u64>,
    locals: Vec<VertexId>,
    facet_locals: Vec<[u32; 3]>,
    created: Vec<u64>,
    stamp: u32,
    rng: SplitMix64,
    pub stats: KernelStats,
}

impl Workspace {
    pub fn new(seed: u64) -> Self {
        Workspace {
            deleted: Vec::with_capacity(64),
            boundary: Vec::with_capacity(64),
            lookup: vec![0; LOOKUP_SIDE * LOOKUP_SIDE],
            locals: Vec::with_capacity(64),
            facet_locals: Vec::with_capacity(64),
            created: Vec::with_capacity(64),
            stamp: 0,
            rng: SplitMix64::seed_from_u64(seed),
            stats: KernelStats::default(),
        }
    }

    /// New tetrahedra of the last applied insertion.
    pub fn created(&self) -> &[u64] {
        &self.created
    }
}

#[inline]
pub(crate) fn ghost_position(v: &[VertexId; 4]) -> Option<usize> {
    v.iter().position(|&x| x == GHOST)
}

/// Inserts vertex `pid`, walking from `start`.
///
/// On any outcome other than [`Insertion::Inserted`] the mesh is left exactly
/// as it was.
pub fn insert_point<S: TetStore>(
    s: &mut S,
    ws: &mut Workspace,
    filter: &StaticFilter,
    start: u64,
    pid: VertexId,
    rules: &Rules<'_>,
) -> Result<Insertion> {
    let p = s.point(pid);
    let Some(t) = walk(s, ws, filter, start, p) else {
        ws.stats.aborted_walk += 1;
        return Ok(Insertion::Aborted(Abort::Walk));
    };
    for v in s.tet(t) {
        if v != GHOST && s.point(v).same_bits(&p) {
            ws.stats.duplicates += 1;
            return Ok(Insertion::Duplicate(v));
        }
    }
    if let Err(stop) = cavity::build(s, ws, filter, t, pid, p, rules) {
        for &d in &ws.deleted {
            s.unmark(d);
        }
        ws.deleted.clear();
        ws.boundary.clear();
        return Ok(match stop {
            cavity::Stop::Duplicate(v) => {
                ws.stats.duplicates += 1;
                Insertion::Duplicate(v)
            }
            cavity::Stop::Abort(a) => {
                match a {
                    Abort::Walk => ws.stats.aborted_walk += 1,
                    Abort::Cavity => ws.stats.aborted_cavity += 1,
                    Abort::TooClose => ws.stats.aborted_close += 1,
                    Abort::NotStarShaped => ws.stats.aborted_star += 1,
                }
                Insertion::Aborted(a)
            }
        });
    }
    let first = ball::retriangulate(s, ws, pid)?;
    ws.stats.inserted += 1;
    Ok(Insertion::Inserted(first))
}
