use super::*;
use std::collections::BTreeSet;
use tetforge_core::kernel::Triangulator;
use tetforge_core::predicates::{orient3d, perturbed_in_sphere, Sign};
use tetforge_core::rng::stream;

fn cloud(n: usize, seed: u64) -> Vec<Point3> {
    let mut r = stream(seed, &[]);
    (0..n).map(|_| Point3::new(r.random(), r.random(), r.random())).collect()
}

fn sequential(points: Vec<Point3>, seed: u64) -> Vec<[VertexId; 4]> {
    let opts = TriangulateOptions { seed, k: None };
    tetforge_core::triangulate(points, &opts).unwrap().0.canonical_tet_set()
}

fn opts(workers: usize) -> ParallelOptions {
    ParallelOptions { workers, seed: 3, ..ParallelOptions::default() }
}

/// Conflict test written straight from the definition.
fn in_conflict(m: &MeshStore, t: u64, p: Point3, pid: VertexId) -> bool {
    let v = m.tet(t);
    let real = |v: [VertexId; 4]| {
        let q = v.map(|x| m.point(x));
        perturbed_in_sphere([q[0], q[1], q[2], q[3], p], [v[0], v[1], v[2], v[3], pid]).unwrap() == Sign::Positive
    };
    match v.iter().position(|&x| x == GHOST) {
        None => real(v),
        Some(k) => {
            let q = v.map(|x| if x == GHOST { p } else { m.point(x) });
            match orient3d(q[0], q[1], q[2], q[3]) {
                Sign::Positive => true,
                Sign::Negative => false,
                Sign::Zero => real(m.tet(m.neighbor(4 * t + k as u64) >> 2)),
            }
        }
    }
}

fn containing(m: &MeshStore, p: Point3) -> u64 {
    m.real_tets()
        .find(|&t| {
            let q = m.tet(t).map(|x| m.point(x));
            (0..4).all(|i| {
                let mut w = q;
                w[i] = p;
                orient3d(w[0], w[1], w[2], w[3]) != Sign::Negative
            })
        })
        .expect("point inside the hull")
}

#[derive(Debug, PartialEq)]
enum Expect {
    Inserted,
    Walk,
    Cavity,
}

#[test]
fn try_insert_follows_the_ownership_rules() {
    // 300 inserted points split at x = 0.5; probes are inserted one at a
    // time into fresh copies of the same mesh
    let mut pts = cloud(300, 21);
    let probes: Vec<Point3> = (0..120)
        .map(|i| {
            let a = i as f64 / 120.0;
            Point3::new(0.1 + 0.8 * a, 0.2 + 0.6 * ((7.0 * a) % 1.0), 0.25 + 0.5 * ((13.0 * a) % 1.0))
        })
        .collect();
    let probe0 = pts.len() as VertexId;
    pts.extend_from_slice(&probes);
    let mesh = MeshStore::new(pts.clone(), ScratchMode::Colors).unwrap();
    let order: Vec<VertexId> = (0..300).collect();
    let (mut tri, used) = Triangulator::new(mesh, &order, 1).unwrap();
    for v in 0..300 {
        if !used.contains(&v) {
            tri.insert(v).unwrap();
        }
    }
    let base = tri.mesh;
    let part: Vec<u16> = pts.iter().map(|p| u16::from(p.x >= 0.5)).collect();
    let ghost = 1;
    let owner = |m: &MeshStore, t: u64| owner_of_tet(m.tet(t), &part, ghost);
    let filter = StaticFilter::new(1.0);

    let mut seen = BTreeSet::new();
    for (i, &p) in probes.iter().enumerate() {
        let pid = probe0 + i as VertexId;
        let me = part[pid as usize];
        let inside = containing(&base, p);
        // start from an owned tetrahedron far from the probe
        let start = base
            .real_tets()
            .filter(|&t| owner(&base, t) == me)
            .min_by(|&a, &b| {
                let d = |t: u64| -base.point(base.tet(t)[0]).dist2(p);
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        let expect = if owner(&base, inside) != me {
            Expect::Walk
        } else {
            let cavity: Vec<u64> = base.live_tets().filter(|&t| in_conflict(&base, t, p, pid)).collect();
            let mut touched = cavity.clone();
            for &t in &cavity {
                touched.extend(base.neighbors(t).map(|r| r >> 2));
            }
            if touched.iter().all(|&t| owner(&base, t) == me) {
                Expect::Inserted
            } else {
                Expect::Cavity
            }
        };
        for start in [inside, start] {
            if owner(&base, start) != me {
                continue;
            }
            let raw = base.clone();
            let before = raw.compact(true);
            let (shared, _, _) = SharedMesh::from_mesh(raw, 0).unwrap();
            let mut w = shared.worker(me, Territory::Part { part: &part, ghost }, Vec::new());
            let mut ws = Workspace::new(9);
            let got = insert_point(&mut w, &mut ws, &filter, start, pid, &Rules::DELAUNAY).unwrap();
            drop(w.finish());
            let after = shared.snapshot(&[], &[]).unwrap();
            match got {
                Insertion::Inserted(_) => {
                    assert_eq!(expect, Expect::Inserted, "probe {i}");
                    audit(&after, &AuditOptions::local().partial()).unwrap();
                }
                Insertion::Aborted(Abort::Walk) => {
                    // a long walk may leave home even when the target is owned
                    assert_ne!(start, inside);
                    assert_eq!(after.compact(true), before);
                }
                Insertion::Aborted(Abort::Cavity) => {
                    assert_eq!(expect, Expect::Cavity, "probe {i}");
                    assert_eq!(after.compact(true), before);
                }
                other => panic!("probe {i}: {other:?}"),
            }
            assert!(after.live_tets().all(|t| after.color(t) & color::MARK == 0));
            if expect == Expect::Walk {
                assert_eq!(got, Insertion::Aborted(Abort::Walk), "probe {i}");
            }
            seen.insert(format!("{got:?}").split('(').next().unwrap().to_string() + &format!("{:?}", expect));
        }
    }
    // every outcome occurred at least once
    assert!(seen.iter().any(|s| s.starts_with("Inserted")));
    assert!(seen.iter().any(|s| s.ends_with("Walk")));
    assert!(seen.iter().any(|s| s.ends_with("Cavity")));
}

#[test]
fn parallel_matches_sequential() {
    let pts = cloud(14000, 5);
    let expected = sequential(pts.clone(), 3);
    for workers in [2, 3, 4, 8] {
        let (m, rep) = parallel_triangulate(pts.clone(), &opts(workers)).unwrap();
        audit(&m, &AuditOptions::local()).unwrap();
        assert_eq!(m.canonical_tet_set(), expected, "{workers} workers");
        assert!(rep.rounds.iter().any(|r| r.threads > 1));
        assert_eq!(rep.kernel.inserted as usize + 4, 14000);
        for r in &rep.rounds {
            assert!((0.0..=1.0).contains(&r.rho));
        }
    }
}

#[test]
fn one_worker_is_the_sequential_driver() {
    let pts = cloud(3000, 8);
    let (m, rep) = parallel_triangulate(pts.clone(), &opts(1)).unwrap();
    let (s, st) = tetforge_core::triangulate(pts, &TriangulateOptions { seed: 3, k: None }).unwrap();
    assert_eq!(m.compact(true), s.compact(true));
    assert_eq!(rep.kernel, st.kernel);
}

#[test]
fn runs_are_reproducible() {
    let pts = cloud(20000, 6);
    let strip = |r: &ParallelReport| {
        r.rounds.iter().map(|s| (s.round, s.attempt, s.threads, s.to_insert, s.inserted)).collect::<Vec<_>>()
    };
    let (a, ra) = parallel_triangulate(pts.clone(), &opts(4)).unwrap();
    let (b, rb) = parallel_triangulate(pts, &opts(4)).unwrap();
    assert_eq!(a.compact(true), b.compact(true));
    assert_eq!(strip(&ra), strip(&rb));
    assert_eq!(ra.kernel, rb.kernel);
}

#[test]
fn growth_under_eight_threads_keeps_the_mesh_valid() {
    let pts = cloud(30000, 7);
    let expected = sequential(pts.clone(), 3);
    let o = ParallelOptions { initial_capacity: Some(100), trace: true, audit_rate: 0.5, ..opts(8) };
    let (m, rep) = parallel_triangulate(pts, &o).unwrap();
    assert!(rep.growths >= 3, "{} growths", rep.growths);
    assert!(rep.audits > 0);
    assert_eq!(rep.trace_violations, 0);
    audit(&m, &AuditOptions::local()).unwrap();
    assert_eq!(m.canonical_tet_set(), expected);
}

#[test]
fn created_slots_are_distinct() {
    let (m, _) = parallel_triangulate(cloud(20000, 9), &opts(4)).unwrap();
    let live: Vec<u64> = m.live_tets().collect();
    let set: BTreeSet<u64> = live.iter().copied().collect();
    assert_eq!(set.len(), live.len());
    let free: BTreeSet<u64> = m.free_pool().iter().copied().collect();
    assert_eq!(free.len(), m.free_pool().len());
    assert!(free.is_disjoint(&set));
}

#[test]
fn duplicates_are_skipped_in_parallel() {
    let mut pts = cloud(8000, 10);
    for i in 0..50 {
        pts.push(pts[i * 37]);
    }
    let (m, rep) = parallel_triangulate(pts, &opts(4)).unwrap();
    assert_eq!(m.skipped().len(), 50);
    assert_eq!(rep.kernel.duplicates, 50);
    audit(&m, &AuditOptions::local()).unwrap();
}

#[test]
fn reshuffle_moves_partition_boundaries() {
    let pts = cloud(1000, 11);
    let bbox = Aabb::of(&pts).unwrap();
    let cfg = SfcConfig::new(bbox, 4);
    let assign = |cfg: SfcConfig| {
        let mut keys: Vec<SfcKey> =
            pts.iter().enumerate().map(|(i, &p)| SfcKey { key: cfg.key(p), value: i as u64 }).collect();
        par_radix_sort_pairs(&mut keys, cfg.key_bits(), 1);
        let (table, _) = partition_points(&keys, 4, cfg);
        pts.iter().map(|&p| table.part_of_key(cfg.key(p))).collect::<Vec<_>>()
    };
    let a = assign(cfg);
    assert_eq!(a, assign(cfg.with_transform(tetforge_core::sfc::GridTransform::IDENTITY)));
    let b = assign(reshuffle(&cfg, 1, &[0, 1]));
    let moved = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    assert!(moved > 0);
}

#[test]
fn too_few_points() {
    assert!(matches!(
        parallel_triangulate(cloud(3, 1), &opts(4)),
        Err(Error::Core(tetforge_core::Error::TooFewPoints(3)))
    ));
}
