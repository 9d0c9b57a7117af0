//! Tetrahedron arrays shared by worker threads.
//!
//! Every slot is an atomic accessed with relaxed ordering. The insertion rules
//! guarantee that a thread only writes slots of tetrahedra it owns, and a
//! thread decides ownership from the vertex slots alone: a torn read of a
//! tetrahedron being rewritten by its owner still shows at least two of the
//! owner's vertices, so it never looks like someone else's.
//!
//! Growth replaces the arrays. It runs under the write half of a lock that
//! every worker holds for reading between two insertions, so all workers are
//! parked while the arrays move.

use std::ops::Range;
use std::sync::atomic::{AtomicU16, AtomicU32, AtomicU64, AtomicUsize, Ordering::Relaxed};
use std::sync::{PoisonError, RwLock, RwLockReadGuard};

use tetforge_core::kernel::TetStore;
use tetforge_core::mesh::{color, RawMesh};
use tetforge_core::{Error, MeshStore, Point3, Result, ScratchMode, VertexId, GHOST};

use super::partition::owner_of_tet;

/// Minimum number of slots taken per reservation.
pub const RESERVE_BLOCK: u64 = 8192;

#[derive(Debug, Default)]
struct Storage {
    vertices: Vec<[AtomicU32; 4]>,
    neighbors: Vec<[AtomicU64; 4]>,
    colors: Vec<AtomicU16>,
}

impl Storage {
    fn capacity(&self) -> u64 {
        self.vertices.len() as u64
    }

    fn grow_to(&mut self, slots: u64) -> Result<()> {
        let add = (slots as usize).saturating_sub(self.vertices.len());
        if add == 0 {
            return Ok(());
        }
        self.vertices.try_reserve_exact(add).map_err(|_| Error::Allocation)?;
        self.neighbors.try_reserve_exact(add).map_err(|_| Error::Allocation)?;
        self.colors.try_reserve_exact(add).map_err(|_| Error::Allocation)?;
        let n = slots as usize;
        self.vertices.resize_with(n, || [GHOST; 4].map(AtomicU32::new));
        self.neighbors.resize_with(n, || [u64::MAX; 4].map(AtomicU64::new));
        self.colors.resize_with(n, || AtomicU16::new(color::DELETED));
        Ok(())
    }
}

/// Mesh whose tetrahedra are modified concurrently by [`Worker`]s.
#[derive(Debug)]
pub struct SharedMesh {
    points: Vec<Point3>,
    storage: RwLock<Storage>,
    /// Slots below this index have been handed out.
    counter: AtomicU64,
    /// Workers waiting to grow the arrays.
    growers: AtomicUsize,
    growths: AtomicU64,
}

/// Ownership rule applied by a worker.
#[derive(Clone, Copy, Debug)]
pub enum Territory<'a> {
    /// Single worker: every tetrahedron is admitted.
    All,
    Part {
        /// Partition of every vertex.
        part: &'a [u16],
        ghost: u16,
    },
}

impl SharedMesh {
    /// Takes over a mesh in color mode, with room for at least `capacity`
    /// slots. Returns the mesh's free pool and skipped vertices.
    pub fn from_mesh(mesh: MeshStore, capacity: usize) -> Result<(Self, Vec<u64>, Vec<VertexId>)> {
        let raw = mesh.into_raw();
        let slots = raw.tet_vertices.len();
        let mut st = Storage::default();
        st.grow_to(capacity.max(slots) as u64)?;
        for t in 0..slots {
            for i in 0..4 {
                st.vertices[t][i] = AtomicU32::new(raw.tet_vertices[t][i]);
                st.neighbors[t][i] = AtomicU64::new(raw.tet_neighbors[t][i]);
            }
            st.colors[t] = AtomicU16::new(raw.colors[t]);
        }
        let mesh = SharedMesh {
            points: raw.points,
            storage: RwLock::new(st),
            counter: AtomicU64::new(slots as u64),
            growers: AtomicUsize::new(0),
            growths: AtomicU64::new(0),
        };
        Ok((mesh, raw.free, raw.skipped))
    }

    /// Back to an owned mesh in the given mode.
    pub fn into_mesh(self, free: Vec<u64>, skipped: Vec<VertexId>, mode: ScratchMode) -> Result<MeshStore> {
        let slots = self.counter.load(Relaxed) as usize;
        let st = self.storage.into_inner().unwrap_or_else(PoisonError::into_inner);
        let take = |v: &[AtomicU32; 4]| v.each_ref().map(|x| x.load(Relaxed));
        let raw = RawMesh {
            points: self.points,
            tet_vertices: st.vertices[..slots].iter().map(take).collect(),
            tet_neighbors: st.neighbors[..slots].iter().map(|v| v.each_ref().map(|x| x.load(Relaxed))).collect(),
            colors: st.colors[..slots].iter().map(|c| c.load(Relaxed)).collect(),
            free,
            skipped,
        };
        MeshStore::from_raw(raw, mode)
    }

    /// Copy of the current state, for audits between attempts.
    pub fn snapshot(&self, free: &[u64], skipped: &[VertexId]) -> Result<MeshStore> {
        let slots = self.counter.load(Relaxed) as usize;
        let st = self.storage.read().unwrap_or_else(PoisonError::into_inner);
        let raw = RawMesh {
            points: self.points.clone(),
            tet_vertices: st.vertices[..slots].iter().map(|v| v.each_ref().map(|x| x.load(Relaxed))).collect(),
            tet_neighbors: st.neighbors[..slots].iter().map(|v| v.each_ref().map(|x| x.load(Relaxed))).collect(),
            colors: st.colors[..slots].iter().map(|c| c.load(Relaxed)).collect(),
            free: free.to_vec(),
            skipped: skipped.to_vec(),
        };
        MeshStore::from_raw(raw, ScratchMode::Colors)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Appends vertices; only possible while no worker is running.
    pub fn push_points(&mut self, pts: &[Point3]) -> Result<Range<VertexId>> {
        let start = self.points.len();
        if start + pts.len() >= GHOST as usize {
            return Err(Error::TooManyPoints(start + pts.len()));
        }
        if let Some(i) = pts.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index: start + i });
        }
        self.points.extend_from_slice(pts);
        Ok(start as VertexId..self.points.len() as VertexId)
    }

    pub fn capacity(&self) -> u64 {
        self.storage.read().unwrap_or_else(PoisonError::into_inner).capacity()
    }

    /// Number of slots handed out so far.
    pub fn slots(&self) -> u64 {
        self.counter.load(Relaxed)
    }

    pub fn growths(&self) -> u64 {
        self.growths.load(Relaxed)
    }

    /// Claims `max(8192, need)` fresh slots in one atomic step. The caller
    /// must make sure they fit before touching them.
    pub fn reserve(&self, need: u64) -> Range<u64> {
        let count = need.max(RESERVE_BLOCK);
        let start = self.counter.fetch_add(count, Relaxed);
        start..start + count
    }

    /// Sequential access for driver phases when no worker runs.
    pub fn tet(&self, t: u64) -> [VertexId; 4] {
        let st = self.storage.read().unwrap_or_else(PoisonError::into_inner);
        st.vertices[t as usize].each_ref().map(|x| x.load(Relaxed))
    }

    /// Runs `f` over every handed-out slot as `(t, vertices, color)`.
    pub fn for_each_tet(&self, mut f: impl FnMut(u64, [VertexId; 4], u16)) {
        let st = self.storage.read().unwrap_or_else(PoisonError::into_inner);
        for t in 0..self.slots() as usize {
            f(t as u64, st.vertices[t].each_ref().map(|x| x.load(Relaxed)), st.colors[t].load(Relaxed));
        }
    }

    pub fn neighbor(&self, slot: u64) -> u64 {
        let st = self.storage.read().unwrap_or_else(PoisonError::into_inner);
        st.neighbors[(slot >> 2) as usize][(slot & 3) as usize].load(Relaxed)
    }

    /// A worker with thread id `tid` (below 2048) and its own slot pool.
    pub fn worker<'a>(&'a self, tid: u16, territory: Territory<'a>, pool: Vec<u64>) -> Worker<'a> {
        assert!(tid < color::REGION, "thread id too large for the mark");
        Worker {
            mesh: self,
            guard: Some(self.storage.read().unwrap_or_else(PoisonError::into_inner)),
            tid,
            mark: color::MARK | tid,
            territory,
            saved: Vec::with_capacity(64),
            pool,
            trace: None,
        }
    }
}

/// One thread's view of a [`SharedMesh`].
#[derive(Debug)]
pub struct Worker<'a> {
    mesh: &'a SharedMesh,
    guard: Option<RwLockReadGuard<'a, Storage>>,
    tid: u16,
    mark: u16,
    territory: Territory<'a>,
    /// Colors of tetrahedra marked by the insertion in progress.
    saved: Vec<(u64, u16)>,
    pool: Vec<u64>,
    trace: Option<Vec<[VertexId; 4]>>,
}

impl<'a> Worker<'a> {
    #[inline]
    fn st(&self) -> &Storage {
        self.guard.as_deref().expect("worker holds the storage lock")
    }

    pub fn tid(&self) -> u16 {
        self.tid
    }

    /// Records the vertices of every tetrahedron this worker deletes or
    /// creates, for checking ownership afterwards.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<[VertexId; 4]> {
        self.trace.take().unwrap_or_default()
    }

    /// Called between insertions: parks while another worker grows the
    /// arrays, and forgets the previous insertion's marks.
    pub fn checkpoint(&mut self) {
        self.saved.clear();
        if self.mesh.growers.load(Relaxed) > 0 {
            self.guard = None;
            // the grower holds the write half; this blocks until it is done
            self.guard = Some(self.mesh.storage.read().unwrap_or_else(PoisonError::into_inner));
        }
    }

    /// Hands back the slot pool.
    pub fn finish(mut self) -> Vec<u64> {
        self.guard = None;
        std::mem::take(&mut self.pool)
    }

    pub fn owns(&self, t: u64) -> bool {
        match self.territory {
            Territory::All => true,
            Territory::Part { part, ghost } => owner_of_tet(self.tet(t), part, ghost) == self.tid,
        }
    }

    fn grow(&mut self, end: u64) -> Result<()> {
        self.mesh.growers.fetch_add(1, Relaxed);
        self.guard = None;
        let r = {
            let mut w = self.mesh.storage.write().unwrap_or_else(PoisonError::into_inner);
            if w.capacity() < end {
                let target = end.max(2 * w.capacity());
                self.mesh.growths.fetch_add(1, Relaxed);
                w.grow_to(target)
            } else {
                Ok(())
            }
        };
        self.mesh.growers.fetch_sub(1, Relaxed);
        self.guard = Some(self.mesh.storage.read().unwrap_or_else(PoisonError::into_inner));
        r
    }
}

impl TetStore for Worker<'_> {
    #[inline]
    fn point(&self, v: VertexId) -> Point3 {
        self.mesh.points[v as usize]
    }

    #[inline]
    fn tet(&self, t: u64) -> [VertexId; 4] {
        self.st().vertices[t as usize].each_ref().map(|x| x.load(Relaxed))
    }

    #[inline]
    fn neighbor(&self, slot: u64) -> u64 {
        self.st().neighbors[(slot >> 2) as usize][(slot & 3) as usize].load(Relaxed)
    }

    #[inline]
    fn set_neighbor(&mut self, slot: u64, value: u64) {
        self.st().neighbors[(slot >> 2) as usize][(slot & 3) as usize].store(value, Relaxed);
    }

    #[inline]
    fn in_cavity(&self, t: u64) -> bool {
        self.st().colors[t as usize].load(Relaxed) == self.mark
    }

    fn mark(&mut self, t: u64) {
        let c = &self.st().colors[t as usize];
        let old = c.load(Relaxed);
        c.store(self.mark, Relaxed);
        self.saved.push((t, old));
        if self.trace.is_some() {
            let v = self.tet(t);
            if let Some(tr) = self.trace.as_mut() {
                tr.push(v);
            }
        }
    }

    fn unmark(&mut self, t: u64) {
        let old = self
            .saved
            .iter()
            .rev()
            .find(|s| s.0 == t)
            .map(|s| s.1)
            .expect("unmarking a tetrahedron that was not marked");
        self.st().colors[t as usize].store(old, Relaxed);
    }

    #[inline]
    fn admits(&self, t: u64) -> bool {
        self.owns(t)
    }

    #[inline]
    fn minors(&self, _t: u64) -> Option<[f64; 4]> {
        None
    }

    fn color(&self, t: u64) -> u16 {
        let c = self.st().colors[t as usize].load(Relaxed);
        if c == self.mark {
            self.saved.iter().rev().find(|s| s.0 == t).map_or(0, |s| s.1)
        } else {
            c
        }
    }

    #[inline]
    fn write_tet(&mut self, t: u64, v: [VertexId; 4], c: u16) {
        let st = self.st();
        for (slot, x) in st.vertices[t as usize].iter().zip(v) {
            slot.store(x, Relaxed);
        }
        st.colors[t as usize].store(c & !color::MARK, Relaxed);
    }

    fn take_tet(&mut self) -> Result<u64> {
        if let Some(t) = self.pool.pop() {
            return Ok(t);
        }
        let r = self.mesh.reserve(1);
        if r.end > self.st().capacity() {
            self.grow(r.end)?;
        }
        // pop hands out ascending indices
        self.pool.extend(r.rev());
        Ok(self.pool.pop().expect("fresh reservation"))
    }

    #[inline]
    fn release_tet(&mut self, t: u64) {
        self.st().colors[t as usize].store(color::DELETED, Relaxed);
        self.pool.push(t);
    }

    fn created(&mut self, _t: u64, v: [VertexId; 4]) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(v);
        }
    }
}
