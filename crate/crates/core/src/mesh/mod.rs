//! Flat tetrahedral mesh storage.
//!
//! Tetrahedron `t` owns vertex slots `4t..4t+4` and neighbor slots
//! `4t..4t+4`. Neighbor slot `4t + i` refers to the facet opposite vertex
//! `i` and holds the packed reference `4t' + i'` of the same facet seen from
//! the adjacent tetrahedron `t'`.
//!
//! The exterior is covered by *ghost* tetrahedra that join each convex-hull
//! facet to the sentinel vertex [`GHOST`]. A ghost tetrahedron is oriented so
//! that replacing [`GHOST`] with a point strictly beyond its hull facet gives a
//! positively oriented tetrahedron.

mod audit;
mod build;
mod canonical;

use alloc::vec::Vec;
use core::ops::Range;

pub use audit::{audit, hull_facets, AuditError, AuditOptions, AuditReport, DelaunayCheck};
pub use canonical::{canonical_tet, CompactMesh, NO_NEIGHBOR};

use crate::geom::Point3;
use crate::predicates::{orient3d, SubDeterminants};
use crate::{Error, Result};

/// Index of a vertex; [`GHOST`] is the vertex at infinity.
pub type VertexId = u32;

/// The ghost vertex sentinel.
pub const GHOST: VertexId = u32::MAX;

/// For facet `i` (opposite vertex `i`), the other three local vertex
/// positions ordered so that `(p, f0, f1, f2)` has the orientation of the
/// tetrahedron with vertex `i` replaced by `p`.
pub const FACET: [[usize; 3]; 4] = [[1, 2, 3], [2, 0, 3], [0, 1, 3], [1, 0, 2]];

/// Packed facet reference `4t + i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TetFacetRef(pub u64);

impl TetFacetRef {
    #[inline]
    pub const fn new(tet: u64, facet: usize) -> Self {
        TetFacetRef(tet * 4 + facet as u64)
    }

    #[inline]
    pub const fn tet(self) -> u64 {
        self.0 >> 2
    }

    #[inline]
    pub const fn facet(self) -> usize {
        (self.0 & 3) as usize
    }
}

/// Per-tetrahedron color bits used by the color scratch mode.
pub mod color {
    /// Set while the tetrahedron is deleted or part of a pending cavity.
    pub const MARK: u16 = 0x8000;
    /// Color of tetrahedra in a free pool.
    pub const DELETED: u16 = 0xFFFF;
    /// Facet `i` is constrained when bit `FLAG_SHIFT + i` is set.
    pub const FLAG_SHIFT: u32 = 11;
    pub const FLAGS: u16 = 0x0F << FLAG_SHIFT;
    pub const REGION: u16 = (1 << FLAG_SHIFT) - 1;

    #[inline]
    pub const fn facet_flag(i: usize) -> u16 {
        1 << (FLAG_SHIFT + i as u32)
    }
}

/// A vertex record: coordinates plus one 64-bit scratch word.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[repr(C, align(32))]
pub struct Vertex {
    pub p: Point3,
    pub aux: u64,
}

/// What each tetrahedron stores besides vertices and neighbors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScratchMode {
    /// Negated in-sphere minors; the last one is positive for deleted tets.
    Minors,
    /// A 16-bit color with region, facet-constraint and deletion bits.
    Colors,
}

#[derive(Clone, Debug)]
enum TetScratch {
    Minors(Vec<[f64; 4]>),
    Colors(Vec<u16>),
}

const DELETED_MINORS: [f64; 4] = [0.0, 0.0, 0.0, 1.0];
const GHOST_MINORS: [f64; 4] = [0.0, 0.0, 0.0, -1.0];

/// Structure-of-arrays tetrahedral mesh.
#[derive(Clone, Debug)]
pub struct MeshStore {
    vertices: Vec<Vertex>,
    tet_vertices: Vec<[VertexId; 4]>,
    tet_neighbors: Vec<[u64; 4]>,
    scratch: TetScratch,
    free: Vec<u64>,
    skipped: Vec<VertexId>,
}

impl MeshStore {
    /// An empty mesh over `points`. Fails on non-finite coordinates or when
    /// the ids would not fit below the ghost sentinel.
    pub fn new(points: Vec<Point3>, mode: ScratchMode) -> Result<Self> {
        if points.len() >= GHOST as usize {
            return Err(Error::TooManyPoints(points.len()));
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(MeshStore {
            vertices: points.into_iter().map(|p| Vertex { p, aux: 0 }).collect(),
            tet_vertices: Vec::new(),
            tet_neighbors: Vec::new(),
            scratch: match mode {
                ScratchMode::Minors => TetScratch::Minors(Vec::new()),
                ScratchMode::Colors => TetScratch::Colors(Vec::new()),
            },
            free: Vec::new(),
            skipped: Vec::new(),
        })
    }

    pub fn mode(&self) -> ScratchMode {
        match self.scratch {
            TetScratch::Minors(_) => ScratchMode::Minors,
            TetScratch::Colors(_) => ScratchMode::Colors,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn point(&self, v: VertexId) -> Point3 {
        self.vertices[v as usize].p
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = Point3> + '_ {
        self.vertices.iter().map(|v| v.p)
    }

    #[inline]
    pub fn vertex_aux(&self, v: VertexId) -> u64 {
        self.vertices[v as usize].aux
    }

    #[inline]
    pub fn set_vertex_aux(&mut self, v: VertexId, aux: u64) {
        self.vertices[v as usize].aux = aux;
    }

    #[inline]
    pub(crate) fn aux_mut(&mut self, v: VertexId) -> &mut u64 {
        &mut self.vertices[v as usize].aux
    }

    /// Number of tetrahedron slots, live or not.
    #[inline]
    pub fn tet_slots(&self) -> u64 {
        self.tet_vertices.len() as u64
    }

    pub fn tet_capacity(&self) -> usize {
        self.tet_vertices.capacity()
    }

    #[inline]
    pub fn tet(&self, t: u64) -> [VertexId; 4] {
        self.tet_vertices[t as usize]
    }

    #[inline]
    pub fn neighbor(&self, slot: u64) -> u64 {
        self.tet_neighbors[(slot >> 2) as usize][(slot & 3) as usize]
    }

    #[inline]
    pub fn neighbors(&self, t: u64) -> [u64; 4] {
        self.tet_neighbors[t as usize]
    }

    #[inline]
    pub(crate) fn set_neighbor(&mut self, slot: u64, value: u64) {
        self.tet_neighbors[(slot >> 2) as usize][(slot & 3) as usize] = value;
    }

    /// Makes the two facet slots refer to each other.
    pub fn set_adjacent(&mut self, f1: TetFacetRef, f2: TetFacetRef) {
        debug_assert_ne!(f1, f2, "a facet cannot be its own neighbor");
        debug_assert!(f1.tet() < self.tet_slots() && f2.tet() < self.tet_slots());
        self.set_neighbor(f1.0, f2.0);
        self.set_neighbor(f2.0, f1.0);
    }

    #[inline]
    pub fn is_ghost(&self, t: u64) -> bool {
        self.tet(t).contains(&GHOST)
    }

    #[inline]
    pub fn is_deleted(&self, t: u64) -> bool {
        match &self.scratch {
            TetScratch::Minors(m) => m[t as usize][3] > 0.0,
            TetScratch::Colors(c) => c[t as usize] & color::MARK != 0,
        }
    }

    /// Cached negated minors of a live real tetrahedron.
    #[inline]
    pub fn minors(&self, t: u64) -> Option<&[f64; 4]> {
        match &self.scratch {
            TetScratch::Minors(m) => Some(&m[t as usize]),
            TetScratch::Colors(_) => None,
        }
    }

    /// Color word; zero in minors mode.
    #[inline]
    pub fn color(&self, t: u64) -> u16 {
        match &self.scratch {
            TetScratch::Minors(_) => 0,
            TetScratch::Colors(c) => c[t as usize],
        }
    }

    pub fn set_color(&mut self, t: u64, value: u16) {
        if let TetScratch::Colors(c) = &mut self.scratch {
            c[t as usize] = value;
        }
    }

    /// Flags a live tetrahedron as deleted (reversible).
    #[inline]
    pub fn mark_deleted(&mut self, t: u64) {
        match &mut self.scratch {
            TetScratch::Minors(m) => {
                let s = &mut m[t as usize][3];
                debug_assert!(*s < 0.0);
                *s = -*s;
            }
            TetScratch::Colors(c) => c[t as usize] |= color::MARK,
        }
    }

    /// Undoes [`MeshStore::mark_deleted`].
    #[inline]
    pub fn unmark_deleted(&mut self, t: u64) {
        match &mut self.scratch {
            TetScratch::Minors(m) => {
                let s = &mut m[t as usize][3];
                debug_assert!(*s > 0.0);
                *s = -*s;
            }
            TetScratch::Colors(c) => c[t as usize] &= !color::MARK,
        }
    }

    /// Stores a tetrahedron in slot `t` and refreshes its scratch. Neighbors
    /// are left untouched.
    #[inline]
    pub fn write_tet(&mut self, t: u64, v: [VertexId; 4], tet_color: u16) {
        let minors = match &self.scratch {
            TetScratch::Minors(_) => Some(if v.contains(&GHOST) {
                GHOST_MINORS
            } else {
                live_minors(self.point(v[0]), self.point(v[1]), self.point(v[2]), self.point(v[3]))
            }),
            TetScratch::Colors(_) => None,
        };
        self.tet_vertices[t as usize] = v;
        match &mut self.scratch {
            TetScratch::Minors(m) => m[t as usize] = minors.unwrap_or(GHOST_MINORS),
            TetScratch::Colors(c) => c[t as usize] = tet_color & !color::MARK,
        }
    }

    /// Appends `count` fresh slots flagged deleted. Capacity at least doubles
    /// whenever it is exceeded.
    pub fn allocate_tets(&mut self, count: usize) -> Result<Range<u64>> {
        let start = self.tet_vertices.len();
        let end = start + count;
        if end > self.tet_vertices.capacity() {
            let target = end.max(2 * self.tet_vertices.capacity());
            self.reserve_exact_tets(target - start)?;
        }
        self.tet_vertices.resize(end, [GHOST; 4]);
        self.tet_neighbors.resize(end, [u64::MAX; 4]);
        match &mut self.scratch {
            TetScratch::Minors(m) => m.resize(end, DELETED_MINORS),
            TetScratch::Colors(c) => c.resize(end, color::DELETED),
        }
        Ok(start as u64..end as u64)
    }

    /// Ensures room for `additional` more slots without reallocating.
    pub fn reserve_tets(&mut self, additional: usize) -> Result<()> {
        if self.tet_vertices.capacity() - self.tet_vertices.len() >= additional {
            return Ok(());
        }
        self.reserve_exact_tets(additional)
    }

    fn reserve_exact_tets(&mut self, additional: usize) -> Result<()> {
        self.tet_vertices.try_reserve_exact(additional).map_err(|_| Error::Allocation)?;
        self.tet_neighbors.try_reserve_exact(additional).map_err(|_| Error::Allocation)?;
        match &mut self.scratch {
            TetScratch::Minors(m) => m.try_reserve_exact(additional),
            TetScratch::Colors(c) => c.try_reserve_exact(additional),
        }
        .map_err(|_| Error::Allocation)
    }

    /// A reusable deleted slot, else a freshly allocated one.
    #[inline]
    pub fn take_tet(&mut self) -> Result<u64> {
        match self.free.pop() {
            Some(t) => Ok(t),
            None => Ok(self.allocate_tets(1)?.start),
        }
    }

    /// Returns a deleted slot to the free pool.
    #[inline]
    pub fn release_tet(&mut self, t: u64) {
        debug_assert!(self.is_deleted(t));
        if let TetScratch::Colors(c) = &mut self.scratch {
            c[t as usize] = color::DELETED;
        }
        self.free.push(t);
    }

    pub fn free_pool(&self) -> &[u64] {
        &self.free
    }

    /// Vertices dropped as exact duplicates of an earlier vertex.
    pub fn skipped(&self) -> &[VertexId] {
        &self.skipped
    }

    pub(crate) fn push_skipped(&mut self, v: VertexId) {
        self.skipped.push(v);
    }

    /// Lists every vertex that repeats the coordinates of a smaller id as
    /// skipped and returns a per-vertex duplicate flag.
    ///
    /// Deciding this up front keeps the surviving copy independent of the
    /// insertion order, which matters because the tie-breaking of
    /// degenerate configurations depends on vertex ids.
    pub fn skip_duplicates(&mut self) -> Vec<bool> {
        // -0.0 and 0.0 are the same coordinate
        let key = |p: Point3| [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits);
        let mut ids: Vec<VertexId> = (0..self.vertices.len() as VertexId).collect();
        ids.sort_unstable_by_key(|&v| (key(self.vertices[v as usize].p), v));
        let mut dup = alloc::vec![false; ids.len()];
        for w in ids.windows(2) {
            if key(self.vertices[w[0] as usize].p) == key(self.vertices[w[1] as usize].p) {
                dup[w[1] as usize] = true;
            }
        }
        self.skipped.extend((0..dup.len() as VertexId).filter(|&v| dup[v as usize]));
        dup
    }

    /// Ids of live (not deleted) tetrahedra, ghosts included.
    pub fn live_tets(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.tet_slots()).filter(move |&t| !self.is_deleted(t))
    }

    /// Ids of live real tetrahedra.
    pub fn real_tets(&self) -> impl Iterator<Item = u64> + '_ {
        self.live_tets().filter(move |&t| !self.is_ghost(t))
    }

    pub fn real_tet_count(&self) -> usize {
        self.real_tets().count()
    }

    pub fn ghost_tet_count(&self) -> usize {
        self.live_tets().filter(|&t| self.is_ghost(t)).count()
    }

    /// Bytes held per tetrahedron slot for this scratch mode.
    pub fn bytes_per_tet(&self) -> usize {
        let scratch = match self.mode() {
            ScratchMode::Minors => 32,
            ScratchMode::Colors => 2,
        };
        16 + 32 + scratch
    }

    /// Size of the live data: vertex records plus live tetrahedra.
    pub fn live_bytes(&self) -> usize {
        self.vertices.len() * core::mem::size_of::<Vertex>() + self.live_tets().count() * self.bytes_per_tet()
    }

    /// Seeds the mesh with the first four non-coplanar points of `order`:
    /// one positively oriented tetrahedron and four ghosts. Returns the four
    /// vertex ids used.
    pub fn init_first_tet(&mut self, order: &[VertexId]) -> Result<[VertexId; 4]> {
        if order.len() < 4 {
            return Err(Error::TooFewPoints(order.len()));
        }
        let v = first_non_coplanar(&self.vertices, order).ok_or(Error::DegenerateInput("all points are coplanar"))?;
        let mut tet = v;
        if orient3d(self.point(tet[0]), self.point(tet[1]), self.point(tet[2]), self.point(tet[3]))
            == crate::Sign::Negative
        {
            tet.swap(2, 3);
        }
        self.tet_vertices.clear();
        self.tet_neighbors.clear();
        self.free.clear();
        match &mut self.scratch {
            TetScratch::Minors(m) => m.clear(),
            TetScratch::Colors(c) => c.clear(),
        }
        build::connect(self, &[tet], 0)?;
        Ok(v)
    }

    /// Builds a mesh from real tetrahedra (any orientation), recomputing all
    /// adjacencies and adding ghost tetrahedra over the hull.
    pub fn from_tets(points: Vec<Point3>, tets: &[[VertexId; 4]], mode: ScratchMode) -> Result<Self> {
        let mut m = MeshStore::new(points, mode)?;
        let n = m.num_vertices() as u32;
        let mut fixed = Vec::with_capacity(tets.len());
        for t in tets {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::DegenerateInput("tetrahedron references a missing vertex"));
            }
            let mut t = *t;
            match orient3d(m.point(t[0]), m.point(t[1]), m.point(t[2]), m.point(t[3])) {
                crate::Sign::Positive => {}
                crate::Sign::Negative => t.swap(2, 3),
                crate::Sign::Zero => return Err(Error::DegenerateInput("flat tetrahedron")),
            }
            fixed.push(t);
        }
        build::connect(&mut m, &fixed, 0)?;
        Ok(m)
    }
}

/// Plain arrays behind a [`MeshStore`], with colors as the scratch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawMesh {
    pub points: Vec<Point3>,
    pub tet_vertices: Vec<[VertexId; 4]>,
    pub tet_neighbors: Vec<[u64; 4]>,
    /// Per-slot color; slots with the mark bit set are deleted.
    pub colors: Vec<u16>,
    pub free: Vec<u64>,
    pub skipped: Vec<VertexId>,
}

impl MeshStore {
    /// Takes the mesh apart. In minors mode live tets get color 0.
    pub fn into_raw(self) -> RawMesh {
        let colors = match &self.scratch {
            TetScratch::Colors(c) => c.clone(),
            TetScratch::Minors(m) => m.iter().map(|x| if x[3] > 0.0 { color::DELETED } else { 0 }).collect(),
        };
        RawMesh {
            points: self.vertices.into_iter().map(|v| v.p).collect(),
            tet_vertices: self.tet_vertices,
            tet_neighbors: self.tet_neighbors,
            colors,
            free: self.free,
            skipped: self.skipped,
        }
    }

    /// Reassembles a mesh. Only array shapes and vertex ids are checked;
    /// run [`audit`] for everything else.
    pub fn from_raw(raw: RawMesh, mode: ScratchMode) -> Result<Self> {
        let RawMesh { points, tet_vertices, tet_neighbors, colors, free, skipped } = raw;
        let slots = tet_vertices.len();
        if tet_neighbors.len() != slots || colors.len() != slots {
            return Err(Error::DegenerateInput("tetrahedron arrays differ in length"));
        }
        let mut m = MeshStore::new(points, mode)?;
        let n = m.num_vertices() as VertexId;
        let bad_vertex = |v: &[VertexId; 4]| v.iter().any(|&x| x != GHOST && x >= n);
        if tet_vertices.iter().zip(&colors).any(|(v, c)| c & color::MARK == 0 && bad_vertex(v)) {
            return Err(Error::DegenerateInput("tetrahedron references a missing vertex"));
        }
        if free.iter().any(|&t| t as usize >= slots) || skipped.iter().any(|&v| v >= n) {
            return Err(Error::DegenerateInput("free slot or skipped vertex out of range"));
        }
        m.allocate_tets(slots)?;
        for (t, (v, &c)) in tet_vertices.iter().zip(&colors).enumerate() {
            if c & color::MARK == 0 {
                m.write_tet(t as u64, *v, c);
            } else {
                m.tet_vertices[t] = *v;
                m.set_color(t as u64, c);
            }
        }
        m.tet_neighbors = tet_neighbors;
        m.free = free;
        m.skipped = skipped;
        Ok(m)
    }
}

/// Negated minors with the volume term forced strictly negative, so that
/// the sign flip used as the deleted flag is unambiguous.
#[inline]
fn live_minors(a: Point3, b: Point3, c: Point3, d: Point3) -> [f64; 4] {
    let mut m = SubDeterminants::compute(a, b, c, d).negated();
    if m[3] >= 0.0 {
        m[3] = -f64::MIN_POSITIVE;
    }
    m
}

fn first_non_coplanar(vertices: &[Vertex], order: &[VertexId]) -> Option<[VertexId; 4]> {
    let p = |v: VertexId| vertices[v as usize].p;
    let a = order[0];
    let mut it = order.iter().copied().skip(1);
    let b = it.by_ref().find(|&v| !p(v).same_bits(&p(a)))?;
    let c = it.by_ref().find(|&v| !crate::predicates::collinear(p(a), p(b), p(v)))?;
    let d = it.find(|&v| orient3d(p(a), p(b), p(c), p(v)) != crate::Sign::Zero)?;
    Some([a, b, c, d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit() -> Vec<Point3> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn facet_refs_roundtrip() {
        let f = TetFacetRef::new(3, 2);
        assert_eq!(f.0, 14);
        assert_eq!((f.tet(), f.facet()), (3, 2));
    }

    #[test]
    fn set_adjacent_is_reciprocal() {
        let mut m = MeshStore::new(unit(), ScratchMode::Colors).unwrap();
        m.allocate_tets(8).unwrap();
        m.set_adjacent(TetFacetRef::new(3, 2), TetFacetRef::new(7, 0));
        assert_eq!(m.neighbor(14), 28);
        assert_eq!(m.neighbor(28), 14);
        assert_eq!(TetFacetRef(m.neighbor(14)), TetFacetRef::new(7, 0));
    }

    #[test]
    #[should_panic]
    #[cfg(debug_assertions)]
    fn self_adjacency_is_rejected() {
        let mut m = MeshStore::new(unit(), ScratchMode::Colors).unwrap();
        m.allocate_tets(1).unwrap();
        m.set_adjacent(TetFacetRef::new(0, 1), TetFacetRef::new(0, 1));
    }

    #[test]
    fn init_on_unit_tet() {
        for mode in [ScratchMode::Minors, ScratchMode::Colors] {
            let mut m = MeshStore::new(unit(), mode).unwrap();
            let used = m.init_first_tet(&[0, 1, 2, 3]).unwrap();
            assert_eq!(used, [0, 1, 2, 3]);
            assert_eq!(m.real_tet_count(), 1);
            assert_eq!(m.ghost_tet_count(), 4);
            let real = m.real_tets().next().unwrap();
            assert!(!m.is_ghost(real));
            assert!(m.live_tets().filter(|&t| t != real).all(|t| m.is_ghost(t)));
            let mut pairs = 0;
            for t in m.live_tets() {
                for i in 0..4 {
                    let s = 4 * t + i;
                    assert_eq!(m.neighbor(m.neighbor(s)), s);
                    pairs += 1;
                }
            }
            assert_eq!(pairs / 2, 10);
            audit(&m, &AuditOptions::full()).unwrap();
        }
    }

    #[test]
    fn init_skips_coplanar_prefix() {
        let mut pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.3, 0.2, 0.5),
        ];
        let mut m = MeshStore::new(pts.clone(), ScratchMode::Minors).unwrap();
        let used = m.init_first_tet(&[0, 1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(used, [0, 2, 4, 6]);
        pts.truncate(6);
        let mut flat = MeshStore::new(pts, ScratchMode::Minors).unwrap();
        assert!(matches!(flat.init_first_tet(&[0, 1, 2, 3, 4, 5]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn allocation_grows_geometrically() {
        let mut m = MeshStore::new(unit(), ScratchMode::Minors).unwrap();
        assert_eq!(m.allocate_tets(1).unwrap(), 0..1);
        let mut last_cap = m.tet_capacity();
        for i in 1..100_000u64 {
            assert_eq!(m.allocate_tets(1).unwrap().start, i);
            if m.tet_capacity() != last_cap {
                assert!(m.tet_capacity() >= 2 * last_cap);
                last_cap = m.tet_capacity();
            }
        }
        assert!((0..m.tet_slots()).all(|t| m.is_deleted(t)));
    }

    #[test]
    fn deleted_flag_roundtrips() {
        for mode in [ScratchMode::Minors, ScratchMode::Colors] {
            let mut m = MeshStore::new(unit(), mode).unwrap();
            m.init_first_tet(&[0, 1, 2, 3]).unwrap();
            for t in 0..m.tet_slots() {
                assert!(!m.is_deleted(t));
                m.mark_deleted(t);
                assert!(m.is_deleted(t));
                m.unmark_deleted(t);
                assert!(!m.is_deleted(t));
            }
        }
    }

    #[test]
    fn raw_roundtrip() {
        let mut m = MeshStore::new(unit(), ScratchMode::Colors).unwrap();
        m.init_first_tet(&[0, 1, 2, 3]).unwrap();
        m.allocate_tets(3).unwrap();
        let t = m.take_tet().unwrap();
        m.release_tet(t);
        let back = MeshStore::from_raw(m.clone().into_raw(), ScratchMode::Minors).unwrap();
        assert_eq!(back.compact(true), m.compact(true));
        assert_eq!(back.free_pool(), m.free_pool());
        audit(&back, &AuditOptions::full()).unwrap();
        let again = MeshStore::from_raw(back.into_raw(), ScratchMode::Colors).unwrap();
        assert_eq!(again.into_raw(), m.into_raw());
    }

    #[test]
    fn vertex_record_is_32_bytes() {
        assert_eq!(core::mem::size_of::<Vertex>(), 32);
        assert_eq!(core::mem::align_of::<Vertex>(), 32);
    }
}
