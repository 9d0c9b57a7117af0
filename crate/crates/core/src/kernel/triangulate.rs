use alloc::vec::Vec;

use super::{insert_point, Insertion, KernelStats, Rules, Workspace};
use crate::geom::{Aabb, Point3};
use crate::mesh::{MeshStore, ScratchMode, VertexId};
use crate::predicates::StaticFilter;
use crate::sfc::{brio_plan, choose_resolution, default_resolution, sort_round, SfcConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangulateOptions {
    /// Seed of the BRIO shuffle and of the walk's facet choices.
    pub seed: u64,
    /// Curve depth factor: `m = round(k * log2 n)` per round. `None` picks a
    /// depth with a constant expected number of points per cell.
    pub k: Option<f64>,
}

impl Default for TriangulateOptions {
    fn default() -> Self {
        TriangulateOptions { seed: 0x7e7f, k: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangulationStats {
    pub kernel: KernelStats,
    pub round_sizes: Vec<usize>,
}

/// Sequential insertion driver over an owned mesh.
#[derive(Debug)]
pub struct Triangulator {
    pub mesh: MeshStore,
    pub ws: Workspace,
    pub filter: StaticFilter,
    /// Walk start for the next insertion.
    pub last: u64,
}

impl Triangulator {
    /// Seeds a mesh with the first non-coplanar quadruple of `order`.
    pub fn new(mesh: MeshStore, order: &[VertexId], seed: u64) -> Result<(Self, [VertexId; 4])> {
        let pts: Vec<Point3> = mesh.points().collect();
        let bbox = Aabb::of(&pts).ok_or(Error::TooFewPoints(0))?;
        let mut mesh = mesh;
        let used = mesh.init_first_tet(order)?;
        let last = mesh.real_tets().next().unwrap_or(0);
        Ok((Triangulator { mesh, ws: Workspace::new(seed), filter: StaticFilter::new(bbox.max_extent()), last }, used))
    }

    /// Inserts one vertex of the mesh's point set.
    pub fn insert(&mut self, pid: VertexId) -> Result<Insertion> {
        self.insert_with(pid, &Rules::DELAUNAY)
    }

    pub fn insert_with(&mut self, pid: VertexId, rules: &Rules<'_>) -> Result<Insertion> {
        let r = insert_point(&mut self.mesh, &mut self.ws, &self.filter, self.last, pid, rules)?;
        match r {
            Insertion::Inserted(t) => self.last = t,
            Insertion::Duplicate(_) => self.mesh.push_skipped(pid),
            Insertion::Aborted(_) => {}
        }
        Ok(r)
    }
}

/// Delaunay tetrahedralization of `points`.
///
/// Points are shuffled into BRIO rounds, each round sorted along the Moore
/// curve, and inserted one at a time. Exact duplicates of a smaller id are
/// skipped and listed in [`MeshStore::skipped`].
pub fn triangulate(points: Vec<Point3>, opts: &TriangulateOptions) -> Result<(MeshStore, TriangulationStats)> {
    let n = points.len();
    if n < 4 {
        return Err(Error::TooFewPoints(n));
    }
    let mut mesh = MeshStore::new(points, ScratchMode::Minors)?;
    mesh.reserve_tets(7 * n + 64)?;
    let pts: Vec<Point3> = mesh.points().collect();
    let bbox = Aabb::of(&pts).ok_or(Error::TooFewPoints(0))?;
    let dup = mesh.skip_duplicates();
    let plan = brio_plan(n, opts.seed);
    let order: Vec<VertexId> = plan.order.iter().copied().filter(|&v| !dup[v as usize]).collect();
    let (mut tri, used) = Triangulator::new(mesh, &order, opts.seed)?;

    let mut stats = TriangulationStats::default();
    let mut ids = Vec::new();
    for round in plan.rounds() {
        ids.clear();
        ids.extend(round.iter().copied().filter(|&v| !dup[v as usize] && !used.contains(&v)));
        let m = match opts.k {
            Some(k) => choose_resolution(ids.len(), k),
            None => default_resolution(ids.len()),
        };
        let order = sort_round(&pts, &ids, &SfcConfig::new(bbox, m));
        stats.round_sizes.push(order.len());
        for pid in order {
            tri.insert(pid)?;
        }
    }
    stats.kernel = tri.ws.stats;
    stats.kernel.duplicates += dup.iter().filter(|&&d| d).count() as u64;
    Ok((tri.mesh, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{audit, AuditOptions};
    use crate::rng::stream;
    use alloc::vec;
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut r = stream(seed, &[]);
        (0..n).map(|_| Point3::new(r.random(), r.random(), r.random())).collect()
    }

    #[test]
    fn the_smallest_id_of_a_duplicate_survives() {
        let mut pts = random_points(300, 3);
        pts[40] = pts[200];
        pts[250] = pts[200];
        pts[7] = Point3::new(-0.0, pts[9].y, pts[9].z);
        pts[9].x = 0.0;
        for seed in 0..4 {
            let (m, st) = triangulate(pts.clone(), &TriangulateOptions { seed, k: None }).unwrap();
            assert_eq!(m.skipped(), &[9, 200, 250]);
            assert_eq!(st.kernel.duplicates, 3);
            audit(&m, &AuditOptions::local()).unwrap();
        }
    }

    #[test]
    fn four_points_give_one_tet() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let (m, _) = triangulate(pts, &TriangulateOptions::default()).unwrap();
        assert_eq!(m.real_tet_count(), 1);
        assert_eq!(m.ghost_tet_count(), 4);
    }

    #[test]
    fn fifth_point_splits_tet() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.1, 0.1, 0.1),
        ];
        let mesh = MeshStore::new(pts, ScratchMode::Minors).unwrap();
        let (mut t, _) = Triangulator::new(mesh, &[0, 1, 2, 3], 1).unwrap();
        assert!(matches!(t.insert(4).unwrap(), Insertion::Inserted(_)));
        assert_eq!(t.mesh.real_tet_count(), 4);
        assert_eq!(t.ws.stats.deleted, 1);
        assert_eq!(t.ws.stats.created, 4);
        audit(&t.mesh, &AuditOptions::full()).unwrap();
    }

    #[test]
    fn duplicate_leaves_mesh_unchanged() {
        let mut pts = random_points(30, 3);
        pts.push(pts[7]);
        let mesh = MeshStore::new(pts, ScratchMode::Minors).unwrap();
        let order: Vec<u32> = (0..31).collect();
        let (mut t, used) = Triangulator::new(mesh, &order, 1).unwrap();
        for v in 0..30 {
            if !used.contains(&v) {
                t.insert(v).unwrap();
            }
        }
        let before = t.mesh.canonical_tet_set();
        assert_eq!(t.insert(30).unwrap(), Insertion::Duplicate(7));
        assert_eq!(t.mesh.canonical_tet_set(), before);
        assert_eq!(t.mesh.skipped(), &[30]);
        audit(&t.mesh, &AuditOptions::full()).unwrap();
    }

    #[test]
    fn random_cloud_is_delaunay() {
        for mode in [ScratchMode::Minors, ScratchMode::Colors] {
            let pts = random_points(200, 11);
            let mesh = MeshStore::new(pts, mode).unwrap();
            let order: Vec<u32> = (0..200).collect();
            let (mut t, used) = Triangulator::new(mesh, &order, 5).unwrap();
            for v in 0..200 {
                if !used.contains(&v) {
                    assert!(matches!(t.insert(v).unwrap(), Insertion::Inserted(_)));
                }
            }
            audit(&t.mesh, &AuditOptions::full()).unwrap();
        }
    }

    #[test]
    fn lattice_points_are_handled() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    pts.push(Point3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        let (m, st) = triangulate(pts, &TriangulateOptions::default()).unwrap();
        assert_eq!(st.kernel.duplicates, 0);
        audit(&m, &AuditOptions::full()).unwrap();
    }

    #[test]
    fn coplanar_input_fails() {
        let pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(matches!(triangulate(pts, &TriangulateOptions::default()), Err(Error::DegenerateInput(_))));
    }
}
