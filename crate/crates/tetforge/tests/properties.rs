use proptest::prelude::*;
use tetforge::io::{read_mesh, read_points, write_mesh, write_points, MeshFormat, PointFormat};
use tetforge::parallel::{parallel_triangulate, ParallelOptions};
use tetforge::refine::{filter_points, Candidate, SPACING};
use tetforge::sort::par_radix_sort_pairs;
use tetforge_core::mesh::{audit, AuditOptions};
use tetforge_core::sfc::SfcKey;
use tetforge_core::{triangulate, Aabb, Point3, TriangulateOptions};

fn unit_point() -> impl Strategy<Value = Point3> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

/// Points on a coarse grid: many coplanar and cospherical subsets, and
/// duplicates once there are more than a few thousand.
fn lattice_point() -> impl Strategy<Value = Point3> {
    (0..16u8, 0..16u8, 0..16u8).prop_map(|(x, y, z)| Point3::new(f64::from(x), f64::from(y), f64::from(z)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parallel_tets_equal_sequential(
        pts in prop::collection::vec(unit_point(), 5..8000),
        workers in 2usize..9,
        seed in any::<u64>(),
    ) {
        let expected = triangulate(pts.clone(), &TriangulateOptions { seed, k: None }).unwrap().0;
        let opts = ParallelOptions { workers, seed, ..ParallelOptions::default() };
        let (m, report) = parallel_triangulate(pts, &opts).unwrap();
        audit(&m, &AuditOptions::local()).unwrap();
        prop_assert_eq!(m.canonical_tet_set(), expected.canonical_tet_set());
        for r in &report.rounds {
            prop_assert!(r.inserted <= r.to_insert && r.threads >= 1 && r.threads <= workers);
        }
    }

    #[test]
    fn degenerate_inputs_stay_valid_in_parallel(
        pts in prop::collection::vec(lattice_point(), 5..5000),
        workers in 2usize..6,
        seed in any::<u64>(),
    ) {
        let opts = ParallelOptions { workers, seed, ..ParallelOptions::default() };
        match parallel_triangulate(pts.clone(), &opts) {
            Ok((m, _)) => {
                audit(&m, &AuditOptions::full()).unwrap();
                let one = parallel_triangulate(pts, &ParallelOptions { workers: 1, ..opts }).unwrap().0;
                prop_assert_eq!(m.canonical_tet_set(), one.canonical_tet_set());
            }
            Err(e) => prop_assert_eq!(e.exit_code(), 4),
        }
    }

    #[test]
    fn mesh_files_roundtrip(
        pts in prop::collection::vec(unit_point(), 5..400),
        ghosts in any::<bool>(),
        format in prop::sample::select(vec![MeshFormat::Binary, MeshFormat::Msh, MeshFormat::Text]),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let m = triangulate(pts, &TriangulateOptions::default()).unwrap().0;
        let path = dir.path().join("m");
        write_mesh(&path, &m, format, ghosts).unwrap();
        let back = read_mesh(&path).unwrap();
        audit(&back, &AuditOptions::full()).unwrap();
        prop_assert_eq!(back.compact(true), m.compact(true));
    }

    #[test]
    fn point_files_roundtrip(
        coords in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 0..300),
        binary in any::<bool>(),
    ) {
        let pts: Vec<Point3> = coords.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p");
        let format = if binary { PointFormat::Binary } else { PointFormat::Text };
        write_points(&path, &pts, format).unwrap();
        let back = read_points(&path, None).unwrap();
        let bits = |v: &[Point3]| v.iter().flat_map(|p| [p.x, p.y, p.z].map(f64::to_bits)).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&pts));
    }

    #[test]
    fn spacing_filter_keeps_a_maximal_spaced_set(
        cands in prop::collection::vec((unit_point(), 0.02..0.2f64), 0..600),
    ) {
        let cands: Vec<Candidate> = cands.into_iter().map(|(point, h)| Candidate { point, h }).collect();
        let bbox = Aabb { min: Point3::new(0.0, 0.0, 0.0), max: Point3::new(1.0, 1.0, 1.0) };
        let kept = filter_points(cands.clone(), bbox);
        let apart = |a: &Candidate, b: &Candidate| {
            let d = SPACING * a.h.max(b.h);
            a.point.dist2(b.point) >= d * d
        };
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                prop_assert!(apart(a, b));
            }
        }
        for c in &cands {
            prop_assert!(kept.iter().any(|k| k == c || !apart(k, c)));
        }
        prop_assert_eq!(filter_points(cands.iter().rev().copied().collect(), bbox), kept);
    }

    #[test]
    fn parallel_radix_sort_is_stable(
        keys in prop::collection::vec(any::<u64>(), 0..20000),
        bits in 1u32..=64,
        threads in 1usize..9,
    ) {
        let mask = if bits == 64 { u64::MAX } else { (1 << bits) - 1 };
        let mut v: Vec<SfcKey> = keys.iter().enumerate().map(|(i, k)| SfcKey { key: k & mask & !7, value: i as u64 }).collect();
        let mut e = v.clone();
        e.sort_by_key(|p| p.key);
        par_radix_sort_pairs(&mut v, bits, threads);
        prop_assert_eq!(v, e);
    }
}
