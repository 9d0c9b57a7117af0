//! Multi-threaded insertion.
//!
//! Points waiting for insertion are sorted along the Moore curve and cut into
//! one contiguous block per thread. A tetrahedron belongs to the thread whose
//! block holds at least three of its vertices; the others form a buffer zone
//! nobody touches. Each thread inserts its own points and gives up on a point
//! as soon as its walk or its cavity leaves the thread's territory. Given-up
//! points are retried under a transformed curve, with fewer threads when too
//! few insertions succeed.
//!
//! Outputs only depend on the seed and the worker count: a thread reads and
//! writes only tetrahedra it owns, and only it can create them, so the
//! interleaving of threads changes slot indices but not tetrahedra.

mod partition;
mod shared;

use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering::Relaxed};
use std::thread;
use std::time::Instant;

use rand::{Rng, RngCore};
use tetforge_core::kernel::{insert_point, Abort, Insertion, KernelStats, Rules, Workspace};
use tetforge_core::mesh::{audit, color, AuditOptions};
use tetforge_core::predicates::StaticFilter;
use tetforge_core::rng::{derive_seed, stream};
use tetforge_core::sfc::{brio_plan, choose_resolution, default_resolution, SfcConfig, SfcKey};
use tetforge_core::{Aabb, MeshStore, Point3, ScratchMode, TriangulateOptions, VertexId, GHOST};

pub use partition::{owner_of_tet, partition_points, reduction_policy, reshuffle, PartitionTable, BUFFER};
pub use shared::{SharedMesh, Territory, Worker, RESERVE_BLOCK};

use crate::sort::par_radix_sort_pairs;
use crate::{Error, Result};

/// Thread ids must fit beside the mark bit of a color.
pub const MAX_WORKERS: usize = color::REGION as usize;

const GHOST_TAG: u64 = 0x6768_6f73;
const AUDIT_TAG: u64 = 0x6175_6469;
const WALK_TAG: u64 = 0x7761_6c6b;

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelOptions {
    pub workers: usize,
    pub seed: u64,
    /// Curve depth factor, as in [`TriangulateOptions`].
    pub k: Option<f64>,
    /// Initial tetrahedron capacity; `None` sizes it from the point count.
    pub initial_capacity: Option<usize>,
    /// Record the tetrahedra every worker deletes or creates and check
    /// afterwards that it owned all of them.
    pub trace: bool,
    /// Fraction of attempts followed by an audit of the whole mesh.
    pub audit_rate: f64,
}

impl Default for ParallelOptions {
    fn default() -> Self {
        ParallelOptions {
            workers: 1,
            seed: TriangulateOptions::default().seed,
            k: None,
            initial_capacity: None,
            trace: false,
            audit_rate: 0.0,
        }
    }
}

/// One insertion attempt over the pending points of a round.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RoundStats {
    pub round: usize,
    pub attempt: usize,
    pub threads: usize,
    pub to_insert: usize,
    pub inserted: usize,
    /// `inserted / to_insert`.
    pub rho: f64,
    /// Vertices in the mesh after the attempt.
    pub mesh_vertices: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParallelReport {
    pub rounds: Vec<RoundStats>,
    pub kernel: KernelStats,
    pub growths: u64,
    pub capacity: u64,
    /// Traced tetrahedra a worker touched without owning them.
    pub trace_violations: u64,
    pub audits: u64,
}

impl ParallelReport {
    /// Share of all insertions done by attempts running `threads` threads.
    pub fn share_at(&self, threads: usize) -> f64 {
        let total: usize = self.rounds.iter().map(|r| r.inserted).sum();
        let at: usize = self.rounds.iter().filter(|r| r.threads == threads).map(|r| r.inserted).sum();
        if total == 0 {
            0.0
        } else {
            at as f64 / total as f64
        }
    }
}

/// What became of a batch of points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchOutcome {
    pub inserted: Vec<VertexId>,
    pub duplicates: Vec<VertexId>,
    /// Points refused by the insertion rules.
    pub dropped: Vec<(VertexId, Abort)>,
}

struct Job<'a> {
    tid: u16,
    list: &'a [VertexId],
    start: Option<u64>,
    pool: Vec<u64>,
}

#[derive(Default)]
struct JobResult {
    outcome: BatchOutcome,
    retry: Vec<VertexId>,
    pool: Vec<u64>,
    stats: KernelStats,
    trace: Vec<[VertexId; 4]>,
}

struct Attempt<'a> {
    mesh: &'a SharedMesh,
    filter: &'a StaticFilter,
    rules: &'a Rules<'a>,
    territory: Territory<'a>,
    seed: u64,
    trace: bool,
    stop: &'a AtomicBool,
}

impl Attempt<'_> {
    fn run(&self, job: Job<'_>) -> Result<JobResult> {
        let mut w = self.mesh.worker(job.tid, self.territory, job.pool);
        if self.trace {
            w.enable_trace();
        }
        let mut ws = Workspace::new(self.seed);
        let mut r = JobResult::default();
        let Some(mut start) = job.start else {
            r.retry.extend_from_slice(job.list);
            r.pool = w.finish();
            return Ok(r);
        };
        for (i, &pid) in job.list.iter().enumerate() {
            if self.stop.load(Relaxed) {
                r.retry.extend_from_slice(&job.list[i..]);
                break;
            }
            w.checkpoint();
            let res = insert_point(&mut w, &mut ws, self.filter, start, pid, self.rules);
            match res {
                Ok(Insertion::Inserted(t)) => {
                    start = t;
                    r.outcome.inserted.push(pid);
                }
                Ok(Insertion::Duplicate(_)) => r.outcome.duplicates.push(pid),
                Ok(Insertion::Aborted(Abort::Walk | Abort::Cavity)) => r.retry.push(pid),
                Ok(Insertion::Aborted(a)) => r.outcome.dropped.push((pid, a)),
                Err(e) => {
                    self.stop.store(true, Relaxed);
                    drop(w.finish());
                    return Err(e.into());
                }
            }
        }
        r.trace = w.take_trace();
        r.stats = ws.stats;
        r.pool = w.finish();
        Ok(r)
    }
}

/// Runs `f` over `0..len` in up to `threads` contiguous chunks and
/// concatenates the results.
pub(crate) fn par_map<T: Send>(len: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = threads.clamp(1, len.div_ceil(1 << 14).max(1));
    if threads == 1 {
        return (0..len).map(f).collect();
    }
    let chunk = len.div_ceil(threads);
    let f = &f;
    thread::scope(|s| {
        let hs: Vec<_> = (0..threads)
            .map(|k| s.spawn(move || (k * chunk..((k + 1) * chunk).min(len)).map(f).collect::<Vec<T>>()))
            .collect();
        hs.into_iter().flat_map(|h| h.join().expect("map thread")).collect()
    })
}

fn sorted_tuple(mut v: [VertexId; 4]) -> [VertexId; 4] {
    v.sort_unstable();
    v
}

/// Insertion engine over a mesh shared by worker threads.
#[derive(Debug)]
pub struct Engine {
    mesh: SharedMesh,
    free: Vec<u64>,
    skipped: Vec<VertexId>,
    inserted: Vec<bool>,
    vertex_count: usize,
    bbox: Aabb,
    filter: StaticFilter,
    seed: u64,
    k: Option<f64>,
    trace: bool,
    audit_rate: f64,
    report: ParallelReport,
}

impl Engine {
    /// Takes over `mesh`, with room for at least `capacity` tetrahedra.
    pub fn new(mesh: MeshStore, capacity: usize, opts: &ParallelOptions) -> Result<Self> {
        let mut inserted = vec![false; mesh.num_vertices()];
        for t in mesh.live_tets() {
            for v in mesh.tet(t) {
                if v != GHOST {
                    inserted[v as usize] = true;
                }
            }
        }
        let vertex_count = inserted.iter().filter(|&&b| b).count();
        let pts: Vec<Point3> = mesh.points().collect();
        let bbox = Aabb::of(&pts).ok_or(tetforge_core::Error::TooFewPoints(0))?;
        let (shared, free, skipped) = SharedMesh::from_mesh(mesh, capacity)?;
        Ok(Engine {
            mesh: shared,
            free,
            skipped,
            inserted,
            vertex_count,
            bbox,
            filter: StaticFilter::new(bbox.max_extent()),
            seed: opts.seed,
            k: opts.k,
            trace: opts.trace,
            audit_rate: opts.audit_rate,
            report: ParallelReport::default(),
        })
    }

    pub fn points(&self) -> &[Point3] {
        self.mesh.points()
    }

    pub fn is_inserted(&self, v: VertexId) -> bool {
        self.inserted[v as usize]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn shared(&self) -> &SharedMesh {
        &self.mesh
    }

    pub fn filter(&self) -> &StaticFilter {
        &self.filter
    }

    pub fn report(&self) -> &ParallelReport {
        &self.report
    }

    /// Appends points, not yet inserted. Returns their ids.
    pub fn add_points(&mut self, pts: &[Point3]) -> Result<Range<VertexId>> {
        let ids = self.mesh.push_points(pts)?;
        self.inserted.resize(self.mesh.points().len(), false);
        for &p in pts {
            self.bbox.include(p);
        }
        self.filter = StaticFilter::new(self.bbox.max_extent());
        Ok(ids)
    }

    /// Copy of the mesh in its current state.
    pub fn snapshot(&self) -> Result<MeshStore> {
        Ok(self.mesh.snapshot(&self.free, &self.skipped)?)
    }

    /// Hands back the mesh in color mode, with the final report.
    pub fn finish(mut self) -> Result<(MeshStore, ParallelReport)> {
        self.report.growths = self.mesh.growths();
        self.report.capacity = self.mesh.capacity();
        let report = self.report;
        let mesh = self.mesh.into_mesh(self.free, self.skipped, ScratchMode::Colors)?;
        Ok((mesh, report))
    }

    /// Inserts `ids` with up to `max_threads` threads, retrying aborted
    /// points until every point is inserted, a duplicate, or refused by
    /// `rules`. `round` only tags statistics and random streams.
    pub fn insert_batch(
        &mut self,
        ids: &[VertexId],
        rules: &Rules<'_>,
        max_threads: usize,
        round: usize,
    ) -> Result<BatchOutcome> {
        let mut out = BatchOutcome::default();
        let mut pending: Vec<VertexId> = ids.iter().copied().filter(|&v| !self.inserted[v as usize]).collect();
        if pending.is_empty() {
            return Ok(out);
        }
        let m = match self.k {
            Some(k) => choose_resolution(pending.len(), k),
            None => default_resolution(pending.len()),
        };
        let base = SfcConfig::new(self.bbox, m);
        let mut threads = reduction_policy(1.0, max_threads.clamp(1, MAX_WORKERS), pending.len());
        let mut attempt = 0usize;
        while !pending.is_empty() {
            let timer = Instant::now();
            let tags = [round as u64, attempt as u64];
            let cfg = if attempt == 0 { base } else { reshuffle(&base, self.seed, &tags) };
            let to_insert = pending.len();
            let (done, retry) = self.attempt(&pending, cfg, threads, rules, &tags)?;
            let inserted = done.inserted.len();
            for &v in &done.inserted {
                self.inserted[v as usize] = true;
            }
            self.vertex_count += inserted;
            self.skipped.extend_from_slice(&done.duplicates);
            out.inserted.extend(done.inserted);
            out.duplicates.extend(done.duplicates);
            out.dropped.extend(done.dropped);

            let rho = inserted as f64 / to_insert as f64;
            self.report.rounds.push(RoundStats {
                round,
                attempt,
                threads,
                to_insert,
                inserted,
                rho,
                mesh_vertices: self.vertex_count,
                seconds: timer.elapsed().as_secs_f64(),
            });
            if threads == 1 && !retry.is_empty() {
                unreachable!("a lone worker owns every tetrahedron");
            }
            pending = retry;
            threads = reduction_policy(rho, threads, pending.len());
            attempt += 1;
        }
        Ok(out)
    }

    fn attempt(
        &mut self,
        pending: &[VertexId],
        cfg: SfcConfig,
        threads: usize,
        rules: &Rules<'_>,
        tags: &[u64; 2],
    ) -> Result<(BatchOutcome, Vec<VertexId>)> {
        let points = self.mesh.points();
        let n = points.len();
        let vkeys: Vec<u64> = par_map(n, threads, |v| cfg.key(points[v]));
        let mut sorted: Vec<SfcKey> =
            pending.iter().map(|&v| SfcKey { key: vkeys[v as usize], value: u64::from(v) }).collect();
        par_radix_sort_pairs(&mut sorted, cfg.key_bits(), threads);
        let (table, blocks) = partition_points(&sorted, threads, cfg);
        let lists: Vec<Vec<VertexId>> =
            blocks.iter().map(|b| sorted[b.clone()].iter().map(|k| k.value as VertexId).collect()).collect();
        let first_keys: Vec<Option<u64>> =
            blocks.iter().map(|b| (!b.is_empty()).then(|| sorted[b.start].key)).collect();

        let part: Vec<u16> =
            if threads > 1 { par_map(n, threads, |v| table.part_of_key(vkeys[v])) } else { Vec::new() };
        let ghost = if threads > 1 {
            (stream(self.seed, &[tags[0], tags[1], GHOST_TAG]).next_u64() % threads as u64) as u16
        } else {
            0
        };
        let territory = if threads > 1 { Territory::Part { part: &part, ghost } } else { Territory::All };
        let starts = self.start_tets(&vkeys, &first_keys, territory);

        let share = self.free.len().div_ceil(threads);
        let mut free = std::mem::take(&mut self.free);
        let jobs: Vec<Job<'_>> = lists
            .iter()
            .enumerate()
            .map(|(k, list)| {
                let take = share.min(free.len());
                Job { tid: k as u16, list, start: starts[k], pool: free.split_off(free.len() - take) }
            })
            .collect();
        let stop = AtomicBool::new(false);
        let ctx = Attempt {
            mesh: &self.mesh,
            filter: &self.filter,
            rules,
            territory,
            seed: derive_seed(self.seed, &[tags[0], tags[1], WALK_TAG]),
            trace: self.trace,
            stop: &stop,
        };
        let results: Vec<Result<JobResult>> = if threads == 1 {
            jobs.into_iter().map(|j| ctx.run(j)).collect()
        } else {
            thread::scope(|s| {
                let ctx = &ctx;
                let hs: Vec<_> = jobs
                    .into_iter()
                    .map(|j| {
                        s.spawn(move || {
                            let tid = j.tid;
                            Attempt { seed: derive_seed(ctx.seed, &[u64::from(tid)]), ..*ctx }.run(j)
                        })
                    })
                    .collect();
                hs.into_iter().enumerate().map(|(k, h)| h.join().unwrap_or(Err(Error::WorkerPanic(k)))).collect()
            })
        };

        let mut out = BatchOutcome::default();
        let mut retry = Vec::new();
        let mut first_err = None;
        for (k, r) in results.into_iter().enumerate() {
            match r {
                Ok(r) => {
                    free.extend(r.pool);
                    if threads > 1 {
                        let bad = r.trace.iter().filter(|&&v| owner_of_tet(v, &part, ghost) != k as u16).count();
                        self.report.trace_violations += bad as u64;
                    }
                    self.report.kernel.merge(&r.stats);
                    out.inserted.extend(r.outcome.inserted);
                    out.duplicates.extend(r.outcome.duplicates);
                    out.dropped.extend(r.outcome.dropped);
                    retry.extend(r.retry);
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        self.free = free;
        if let Some(e) = first_err {
            return Err(e);
        }
        if self.audit_rate > 0.0 && stream(self.seed, &[tags[0], tags[1], AUDIT_TAG]).random::<f64>() < self.audit_rate
        {
            let snap = self.mesh.snapshot(&self.free, &self.skipped)?;
            audit(&snap, &AuditOptions::local().partial())?;
            self.report.audits += 1;
        }
        Ok((out, retry))
    }

    /// Walk start of every thread: an owned tetrahedron around the inserted
    /// vertex whose key is closest to the thread's first point.
    ///
    /// Everything here depends on the tetrahedra only, never on slot
    /// indices, which keeps runs reproducible.
    fn start_tets(&self, vkeys: &[u64], first_keys: &[Option<u64>], territory: Territory<'_>) -> Vec<Option<u64>> {
        let threads = first_keys.len();
        let part_of = |v: VertexId| match territory {
            Territory::All => 0,
            Territory::Part { part, ghost } => {
                if v == GHOST {
                    ghost
                } else {
                    part[v as usize]
                }
            }
        };
        let owner = |t: [VertexId; 4]| match territory {
            Territory::All => 0,
            Territory::Part { part, ghost } => owner_of_tet(t, part, ghost),
        };

        let mut anchor: Vec<Option<(u64, VertexId)>> = vec![None; threads];
        for (v, &ins) in self.inserted.iter().enumerate() {
            if !ins {
                continue;
            }
            let k = part_of(v as VertexId) as usize;
            let Some(fk) = first_keys[k] else { continue };
            let d = (vkeys[v].abs_diff(fk), v as VertexId);
            if anchor[k].is_none_or(|a| d < a) {
                anchor[k] = Some(d);
            }
        }

        let mut seed_tet: Vec<Option<u64>> = vec![None; threads];
        self.mesh.for_each_tet(|t, v, c| {
            if c == color::DELETED {
                return;
            }
            for x in v {
                if x == GHOST {
                    continue;
                }
                let k = part_of(x) as usize;
                if seed_tet[k].is_none() && anchor[k].is_some_and(|a| a.1 == x) {
                    seed_tet[k] = Some(t);
                }
            }
        });

        let mut starts: Vec<Option<(u64, [VertexId; 4])>> = vec![None; threads];
        for k in 0..threads {
            let (Some(t0), Some((_, v))) = (seed_tet[k], anchor[k]) else {
                continue;
            };
            // star of v
            let mut seen = vec![t0];
            let mut head = 0;
            while head < seen.len() {
                let t = seen[head];
                head += 1;
                let tv = self.mesh.tet(t);
                if owner(tv) as usize == k {
                    let key = sorted_tuple(tv);
                    if starts[k].is_none_or(|s| key < s.1) {
                        starts[k] = Some((t, key));
                    }
                }
                for (i, &x) in tv.iter().enumerate() {
                    if x == v {
                        continue;
                    }
                    let nb = self.mesh.neighbor(4 * t + i as u64) >> 2;
                    if !seen.contains(&nb) {
                        seen.push(nb);
                    }
                }
            }
        }

        if (0..threads).any(|k| starts[k].is_none() && first_keys[k].is_some()) {
            self.mesh.for_each_tet(|t, v, c| {
                if c == color::DELETED {
                    return;
                }
                let k = owner(v);
                if k == BUFFER || first_keys[k as usize].is_none() {
                    return;
                }
                let s = &mut starts[k as usize];
                let key = sorted_tuple(v);
                if s.is_none_or(|s| key < s.1) {
                    *s = Some((t, key));
                }
            });
        }
        starts.into_iter().map(|s| s.map(|s| s.0)).collect()
    }
}

/// Initial tetrahedron capacity for `n` points and `workers` threads.
pub fn default_capacity(n: usize, workers: usize) -> usize {
    (n as f64 * 7.2) as usize + RESERVE_BLOCK as usize * (workers + 1)
}

/// Delaunay tetrahedralization of `points` on `opts.workers` threads.
///
/// One worker runs the sequential driver unchanged. Otherwise the first
/// BRIO round is inserted by one thread and later rounds by up to
/// `opts.workers` threads. The tetrahedra are the same as the sequential
/// ones; only slot order differs.
pub fn parallel_triangulate(points: Vec<Point3>, opts: &ParallelOptions) -> Result<(MeshStore, ParallelReport)> {
    let n = points.len();
    if n < 4 {
        return Err(tetforge_core::Error::TooFewPoints(n).into());
    }
    if opts.workers <= 1 {
        let topts = TriangulateOptions { seed: opts.seed, k: opts.k };
        let timer = Instant::now();
        let (mesh, st) = tetforge_core::triangulate(points, &topts)?;
        let secs = timer.elapsed().as_secs_f64();
        let mut done = 4;
        let rounds = st
            .round_sizes
            .iter()
            .enumerate()
            .map(|(round, &sz)| {
                done += sz;
                RoundStats {
                    round,
                    attempt: 0,
                    threads: 1,
                    to_insert: sz,
                    inserted: sz,
                    rho: 1.0,
                    mesh_vertices: done,
                    seconds: secs * sz as f64 / n as f64,
                }
            })
            .collect();
        let report = ParallelReport {
            rounds,
            kernel: st.kernel,
            capacity: mesh.tet_capacity() as u64,
            ..ParallelReport::default()
        };
        return Ok((mesh, report));
    }

    let workers = opts.workers.min(MAX_WORKERS);
    let mut mesh = MeshStore::new(points, ScratchMode::Colors)?;
    let dup = mesh.skip_duplicates();
    let plan = brio_plan(n, opts.seed);
    let order: Vec<VertexId> = plan.order.iter().copied().filter(|&v| !dup[v as usize]).collect();
    let used = mesh.init_first_tet(&order)?;
    let capacity = opts.initial_capacity.unwrap_or_else(|| default_capacity(n, workers));
    let mut engine = Engine::new(mesh, capacity, opts)?;
    let mut ids = Vec::new();
    for (round, r) in plan.rounds().enumerate() {
        ids.clear();
        ids.extend(r.iter().copied().filter(|&v| !dup[v as usize] && !used.contains(&v)));
        let threads = if round == 0 { 1 } else { workers };
        engine.insert_batch(&ids, &Rules::DELAUNAY, threads, round)?;
    }
    let (mesh, mut report) = engine.finish()?;
    report.kernel.duplicates += dup.iter().filter(|&&d| d).count() as u64;
    Ok((mesh, report))
}

#[cfg(test)]
mod tests;
