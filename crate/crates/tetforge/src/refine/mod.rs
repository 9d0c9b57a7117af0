//! Mesh generation inside a closed surface.
//!
//! The surface vertices are tetrahedralized first. Every surface triangle
//! must then be a facet of that mesh; those facets are flagged as
//! constraints. Rounds of refinement follow: circumcenters of tetrahedra
//! that are too large for the size field become candidates, candidates too
//! close to their predecessor along the Moore curve are dropped, and the
//! rest are inserted in parallel with cavities that stop at constrained
//! facets, are shrunk until star-shaped, and are refused when a vertex is
//! too close.

mod surface;

use std::collections::HashMap;
use std::time::Instant;

use tetforge_core::kernel::{walk, Abort, Rules, TetStore, Workspace};
use tetforge_core::mesh::{color, RawMesh, FACET};
use tetforge_core::rng::derive_seed;
use tetforge_core::sfc::{default_resolution, radix_sort_pairs, SfcConfig, SfcKey};
use tetforge_core::{Aabb, MeshStore, Point3, ScratchMode, VertexId, GHOST};

pub use surface::{cube_surface, SurfaceMesh};

use crate::parallel::{
    default_capacity, par_map, parallel_triangulate, Engine, ParallelOptions, ParallelReport, Territory,
};
use crate::{Error, Result};

/// Circumradius over local size above which a tetrahedron is refined.
pub const RADIUS_RATIO: f64 = 1.4;
/// Shortest allowed edge between new points, relative to the local size.
pub const SPACING: f64 = 0.7;
/// Region color of tetrahedra outside the domain.
pub const OUTSIDE: u16 = 0;

/// Target edge length.
#[derive(Clone, Debug, PartialEq)]
pub enum SizeField {
    Uniform(f64),
    /// One size per surface vertex, interpolated linearly inside.
    PerVertex(Vec<f64>),
}

impl SizeField {
    /// Sizes taken from the surface's own edge lengths.
    pub fn from_surface(s: &SurfaceMesh) -> Self {
        SizeField::PerVertex(s.vertex_spacing())
    }

    fn validate(&self, vertices: usize) -> Result<()> {
        let ok = |h: f64| h.is_finite() && h > 0.0;
        match self {
            SizeField::Uniform(h) if ok(*h) => Ok(()),
            SizeField::PerVertex(v) if v.len() == vertices && v.iter().all(|&h| ok(h)) => Ok(()),
            _ => Err(Error::Invalid("sizes must be positive and finite, one per surface vertex".into())),
        }
    }

    fn initial(&self, vertices: usize) -> Vec<f64> {
        match self {
            SizeField::Uniform(h) => vec![*h; vertices],
            SizeField::PerVertex(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOptions {
    pub workers: usize,
    pub seed: u64,
    pub max_rounds: usize,
    /// Fraction of insertion attempts followed by a mesh audit.
    pub audit_rate: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { workers: 1, seed: ParallelOptions::default().seed, max_rounds: 100, audit_rate: 0.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct RefineRound {
    /// Inside tetrahedra with a too large circumradius.
    pub oversized: usize,
    pub candidates: usize,
    /// Candidates left after the spacing filter.
    pub filtered: usize,
    pub inserted: usize,
    pub too_close: usize,
    pub not_star_shaped: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefineReport {
    pub rounds: Vec<RefineRound>,
    /// Oversized inside tetrahedra left at the end.
    pub residual: usize,
    pub hit_round_cap: bool,
    pub insertion: ParallelReport,
}

#[derive(Debug)]
pub struct Refined {
    /// Only vertices that made it into the mesh, surface vertices first.
    pub mesh: MeshStore,
    /// Local size at every vertex.
    pub size: Vec<f64>,
    /// Refinement round that inserted each vertex, `None` for the surface.
    pub round: Vec<Option<u32>>,
    pub report: RefineReport,
}

/// Circumcenter and squared circumradius; `None` for flat tetrahedra.
pub fn circumsphere(a: Point3, b: Point3, c: Point3, d: Point3) -> Option<(Point3, f64)> {
    let u = Point3::new(b.x - a.x, b.y - a.y, b.z - a.z);
    let v = Point3::new(c.x - a.x, c.y - a.y, c.z - a.z);
    let w = Point3::new(d.x - a.x, d.y - a.y, d.z - a.z);
    let vw = v.cross(w);
    let den = 2.0 * u.dot(vw);
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let wu = w.cross(u);
    let uv = u.cross(v);
    let (nu, nv, nw) = (u.norm2(), v.norm2(), w.norm2());
    let o = Point3::new(
        (nu * vw.x + nv * wu.x + nw * uv.x) / den,
        (nu * vw.y + nv * wu.y + nw * uv.y) / den,
        (nu * vw.z + nv * wu.z + nw * uv.z) / den,
    );
    Some((Point3::new(a.x + o.x, a.y + o.y, a.z + o.z), o.norm2()))
}

/// Linear interpolation of vertex values at `p` inside tetrahedron `q`.
fn interpolate(q: [Point3; 4], values: [f64; 4], p: Point3) -> f64 {
    let vol = |a: Point3, b: Point3, c: Point3, d: Point3| {
        let u = Point3::new(b.x - a.x, b.y - a.y, b.z - a.z);
        let v = Point3::new(c.x - a.x, c.y - a.y, c.z - a.z);
        let w = Point3::new(d.x - a.x, d.y - a.y, d.z - a.z);
        u.dot(v.cross(w)).max(0.0)
    };
    let mut lambda = [0.0; 4];
    for (i, l) in lambda.iter_mut().enumerate() {
        let mut w = q;
        w[i] = p;
        *l = vol(w[0], w[1], w[2], w[3]);
    }
    let total: f64 = lambda.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return values.iter().sum::<f64>() / 4.0;
    }
    lambda.iter().zip(values).map(|(l, v)| l * v).sum::<f64>() / total
}

/// Triangulates the surface vertices, checks that every surface triangle
/// is a facet, flags those facets on both sides and colors the tetrahedra
/// by region: [`OUTSIDE`] for those connected to the hull without crossing
/// the surface, then 1, 2, ... for the enclosed volumes.
pub fn empty_mesh(surface: &SurfaceMesh, opts: &ParallelOptions) -> Result<MeshStore> {
    surface.validate()?;
    let (mesh, _) = parallel_triangulate(surface.vertices.clone(), opts)?;
    let mut mesh = MeshStore::from_raw(mesh.into_raw(), ScratchMode::Colors)?;

    let mut wanted: HashMap<[VertexId; 3], usize> = HashMap::with_capacity(surface.triangles.len());
    for (i, t) in surface.triangles.iter().enumerate() {
        let mut k = *t;
        k.sort_unstable();
        wanted.insert(k, i);
    }
    let mut found = vec![false; surface.triangles.len()];
    let live: Vec<u64> = mesh.live_tets().collect();
    for &t in &live {
        let v = mesh.tet(t);
        for (i, f) in FACET.iter().enumerate() {
            let mut k = [v[f[0]], v[f[1]], v[f[2]]];
            k.sort_unstable();
            if let Some(&j) = wanted.get(&k) {
                found[j] = true;
                let c = mesh.color(t);
                mesh.set_color(t, c | color::facet_flag(i));
            }
        }
    }
    let missing: Vec<usize> = (0..found.len()).filter(|&i| !found[i]).collect();
    if let Some(&first) = missing.first() {
        return Err(Error::BoundaryRecovery { missing: missing.len(), first: surface.triangles[first] });
    }

    // flood fill regions through unflagged facets
    let mut region: HashMap<u64, u16> = HashMap::with_capacity(live.len());
    let mut next = 1u16;
    let mut seeds: Vec<u64> = live.iter().copied().filter(|&t| mesh.is_ghost(t)).collect();
    seeds.extend(live.iter().copied().filter(|&t| !mesh.is_ghost(t)));
    for s in seeds {
        if region.contains_key(&s) {
            continue;
        }
        let r = if mesh.is_ghost(s) {
            OUTSIDE
        } else {
            let r = next;
            if r > color::REGION {
                return Err(Error::Invalid("too many enclosed volumes".into()));
            }
            next += 1;
            r
        };
        region.insert(s, r);
        let mut stack = vec![s];
        while let Some(t) = stack.pop() {
            let c = mesh.color(t);
            for i in 0..4 {
                if c & color::facet_flag(i) != 0 {
                    continue;
                }
                let n = mesh.neighbor(4 * t + i as u64) >> 2;
                if let std::collections::hash_map::Entry::Vacant(e) = region.entry(n) {
                    e.insert(r);
                    stack.push(n);
                }
            }
        }
    }
    for (&t, &r) in &region {
        let c = mesh.color(t);
        mesh.set_color(t, (c & color::FLAGS) | r);
    }
    Ok(mesh)
}

/// A refinement candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub point: Point3,
    /// Local size at the point.
    pub h: f64,
}

/// Circumcenters of inside tetrahedra whose circumradius exceeds
/// 1.4 times the local size, dropping centers outside the domain. Returns
/// the candidates and the number of oversized tetrahedra.
pub fn sample_points(engine: &Engine, size: &[f64], workers: usize) -> (Vec<Candidate>, usize) {
    let mesh = engine.shared();
    let filter = engine.filter();
    let slots = mesh.slots() as usize;
    let hmin = size.iter().copied().fold(f64::INFINITY, f64::min);
    let chunks = workers.max(1) * 4;
    let chunk = slots.div_ceil(chunks).max(1);
    let per_chunk: Vec<(Vec<Candidate>, usize)> = par_map(chunks, workers, |c| {
        let r = (c * chunk).min(slots)..((c + 1) * chunk).min(slots);
        let w = mesh.worker(0, Territory::All, Vec::new());
        let mut ws = Workspace::new(derive_seed(c as u64, &[]));
        let mut out = Vec::new();
        let mut oversized = 0;
        for t in r {
            let t = t as u64;
            let c = w.color(t);
            if c == color::DELETED || c & color::REGION == OUTSIDE {
                continue;
            }
            let v = w.tet(t);
            if v.contains(&GHOST) {
                continue;
            }
            let q = v.map(|x| w.point(x));
            let Some((center, r2)) = circumsphere(q[0], q[1], q[2], q[3]) else {
                continue;
            };
            let r = r2.sqrt();
            // no interpolated size is below the smallest vertex size
            if r <= RADIUS_RATIO * hmin {
                continue;
            }
            let home = walk(&w, &mut ws, filter, t, center);
            let hv = home.map(|t| w.tet(t));
            let h = match hv {
                Some(hv) if !hv.contains(&GHOST) => {
                    interpolate(hv.map(|x| w.point(x)), hv.map(|x| size[x as usize]), center)
                }
                _ => v.iter().map(|&x| size[x as usize]).sum::<f64>() / 4.0,
            };
            if r <= RADIUS_RATIO * h {
                continue;
            }
            oversized += 1;
            let inside = match (home, hv) {
                (Some(home), Some(hv)) => !hv.contains(&GHOST) && w.color(home) & color::REGION != OUTSIDE,
                _ => false,
            };
            if !inside {
                continue;
            }
            out.push(Candidate { point: center, h });
        }
        drop(w.finish());
        (out, oversized)
    });
    let oversized = per_chunk.iter().map(|c| c.1).sum();
    (per_chunk.into_iter().flat_map(|c| c.0).collect(), oversized)
}

/// Orders candidates along the Moore curve and keeps, greedily in that
/// order, those at least 0.7 times the larger local size away from every
/// candidate kept before.
///
/// Comparing against all kept neighbors, not only the previous one on the
/// curve, makes the spacing hold across partition boundaries too, so
/// the insertion-time distance check never depends on thread timing.
pub fn filter_points(mut candidates: Vec<Candidate>, bbox: Aabb) -> Vec<Candidate> {
    if candidates.is_empty() {
        return candidates;
    }
    let cfg = SfcConfig::new(bbox, default_resolution(candidates.len()));
    // a total order that does not depend on where the candidates came from
    candidates.sort_by(|a, b| {
        let (p, q) = (a.point, b.point);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(p.z.total_cmp(&q.z))
    });
    let mut keys: Vec<SfcKey> =
        candidates.iter().enumerate().map(|(i, c)| SfcKey { key: cfg.key(c.point), value: i as u64 }).collect();
    radix_sort_pairs(&mut keys, cfg.key_bits());

    let cell = SPACING * candidates.iter().map(|c| c.h).fold(0.0, f64::max);
    let cell_of = |p: Point3| {
        [(p.x - bbox.min.x) / cell, (p.y - bbox.min.y) / cell, (p.z - bbox.min.z) / cell].map(|x| x.floor() as i64)
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut kept: Vec<Candidate> = Vec::new();
    for k in keys {
        let c = candidates[k.value as usize];
        let home = cell_of(c.point);
        let mut clear = true;
        'near: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(list) = grid.get(&[home[0] + dx, home[1] + dy, home[2] + dz]) else {
                        continue;
                    };
                    for &j in list {
                        let d = SPACING * c.h.max(kept[j].h);
                        if c.point.dist2(kept[j].point) < d * d {
                            clear = false;
                            break 'near;
                        }
                    }
                }
            }
        }
        if clear {
            grid.entry(home).or_default().push(kept.len());
            kept.push(c);
        }
    }
    kept
}

/// Refines the volume enclosed by `surface` until no inside tetrahedron has
/// a circumradius above 1.4 times the local size, or the round cap is hit.
pub fn refine(surface: &SurfaceMesh, size: &SizeField, opts: &RefineOptions) -> Result<Refined> {
    size.validate(surface.vertices.len())?;
    let popts = ParallelOptions {
        workers: opts.workers,
        seed: opts.seed,
        audit_rate: opts.audit_rate,
        ..ParallelOptions::default()
    };
    let mesh = empty_mesh(surface, &popts)?;
    let mut h = size.initial(surface.vertices.len());
    let mut round_of: Vec<Option<u32>> = vec![None; surface.vertices.len()];
    let capacity = default_capacity(mesh.real_tet_count() * 4, opts.workers);
    let mut engine = Engine::new(mesh, capacity, &popts)?;
    let mut report = RefineReport::default();
    let workers = opts.workers.max(1);

    let mut residual = 0;
    for round in 0..=opts.max_rounds {
        let timer = Instant::now();
        let (cands, oversized) = sample_points(&engine, &h, workers);
        residual = oversized;
        if cands.is_empty() {
            break;
        }
        if round == opts.max_rounds {
            report.hit_round_cap = true;
            break;
        }
        let bbox = Aabb::of(engine.points()).expect("mesh has points");
        let kept = filter_points(cands.clone(), bbox);
        let pts: Vec<Point3> = kept.iter().map(|c| c.point).collect();
        let ids = engine.add_points(&pts)?;
        h.extend(kept.iter().map(|c| c.h));
        round_of.resize(h.len(), Some(round as u32));
        let spacing = |v: VertexId| {
            let d = SPACING * h[v as usize];
            d * d
        };
        let rules =
            Rules { respect_flags: true, star_shaped: true, local_min_dist2: Some(&spacing), ..Rules::DELAUNAY };
        let ids: Vec<VertexId> = ids.collect();
        let out = engine.insert_batch(&ids, &rules, workers, 1 << 20 | round)?;
        let count = |a: Abort| out.dropped.iter().filter(|d| d.1 == a).count();
        report.rounds.push(RefineRound {
            oversized,
            candidates: cands.len(),
            filtered: kept.len(),
            inserted: out.inserted.len(),
            too_close: count(Abort::TooClose),
            not_star_shaped: count(Abort::NotStarShaped),
            seconds: timer.elapsed().as_secs_f64(),
        });
        if out.inserted.is_empty() {
            break;
        }
    }
    report.residual = residual;
    let (mesh, ins) = engine.finish()?;
    report.insertion = ins;
    let (mesh, keep) = drop_unused_vertices(mesh)?;
    let size = keep.iter().map(|&v| h[v as usize]).collect();
    let round = keep.iter().map(|&v| round_of[v as usize]).collect();
    Ok(Refined { mesh, size, round, report })
}

/// Renumbers the vertices that some live tetrahedron uses; returns the
/// mesh and the old id of every new vertex.
pub fn drop_unused_vertices(mesh: MeshStore) -> Result<(MeshStore, Vec<VertexId>)> {
    let mode = mesh.mode();
    let mut raw: RawMesh = mesh.into_raw();
    let mut used = vec![false; raw.points.len()];
    for (v, c) in raw.tet_vertices.iter().zip(&raw.colors) {
        if c & color::MARK == 0 {
            for &x in v {
                if x != GHOST {
                    used[x as usize] = true;
                }
            }
        }
    }
    let keep: Vec<VertexId> = (0..raw.points.len() as VertexId).filter(|&v| used[v as usize]).collect();
    let mut new_id = vec![GHOST; raw.points.len()];
    for (i, &v) in keep.iter().enumerate() {
        new_id[v as usize] = i as VertexId;
    }
    raw.points = keep.iter().map(|&v| raw.points[v as usize]).collect();
    for (v, c) in raw.tet_vertices.iter_mut().zip(&raw.colors) {
        if c & color::MARK == 0 {
            *v = v.map(|x| if x == GHOST { GHOST } else { new_id[x as usize] });
        }
    }
    raw.skipped.clear();
    Ok((MeshStore::from_raw(raw, mode)?, keep))
}
