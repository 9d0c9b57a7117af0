#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::{Command, Output};

use tetforge::io::{read_mesh, write_points, PointFormat, MESH_MAGIC};
use tetforge_core::Point3;

use support::{exact, oracle, uniform_points};

fn tetforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tetforge")).args(args).env_remove("TETFORGE_WORKERS").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn triangulate_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let pts = uniform_points(500, 31);
    let input = dir.path().join("p.xyz");
    write_points(&input, &pts, PointFormat::Text).unwrap();
    for (name, workers) in [("m.msh", "1"), ("m.bin", "3"), ("m.txt", "2")] {
        let out = dir.path().join(name);
        let o = tetforge(&["triangulate", s(&input), "-o", s(&out), "--workers", workers, "--audit", "full"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v = tetforge(&["verify", s(&out)]);
        assert!(v.status.success());
        assert!(stdout(&v).starts_with("PASS"), "{}", stdout(&v));
        assert_eq!(read_mesh(&out).unwrap().canonical_tet_set(), oracle::wrap_delaunay(&pts));
    }
}

/// Byte offset of the neighbor array in a binary mesh file.
fn neighbor_offset(bytes: &[u8]) -> usize {
    let count = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
    let (n, t) = (count(16), count(24));
    40 + 24 * n + 16 * t
}

#[test]
fn corrupted_neighbor_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.bin");
    write_points(&input, &uniform_points(200, 4), PointFormat::Binary).unwrap();
    let mesh = dir.path().join("m.bin");
    assert!(tetforge(&["triangulate", s(&input), "-o", s(&mesh), "--ghosts"]).status.success());
    let mut bytes = std::fs::read(&mesh).unwrap();
    assert_eq!(bytes[..8], MESH_MAGIC);
    let at = neighbor_offset(&bytes) + 8 * 5;
    // tet 1, facet 1 now points at tet 7, facet 2
    bytes[at..at + 8].copy_from_slice(&(4u64 * 7 + 2).to_le_bytes());
    std::fs::write(&mesh, &bytes).unwrap();
    let v = tetforge(&["verify", s(&mesh)]);
    assert_eq!(v.status.code(), Some(2));
    let out = stdout(&v);
    assert!(out.starts_with("FAIL") && out.contains("slot"), "{out}");
}

#[test]
fn non_delaunay_pair_fails() {
    // two tetrahedra on a shared triangle whose apexes sit close to it;
    // the three tetrahedra around the apex edge are the Delaunay ones
    let a = Point3::new(0.0, 0.0, 0.0);
    let b = Point3::new(1.0, 0.0, 0.0);
    let c = Point3::new(0.0, 1.0, 0.0);
    let p = Point3::new(0.3, 0.3, 0.1);
    let q = Point3::new(0.3, 0.3, -0.1);
    // the counterexample, checked with rational arithmetic
    assert_eq!(exact::orient(a, b, c, p), 1);
    assert_eq!(exact::in_sphere(a, b, c, p, q), 1);
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("flip.txt");
    std::fs::write(&mesh, "tetforge-mesh 1\n5 2\n0 0 0\n1 0 0\n0 1 0\n0.3 0.3 0.1\n0.3 0.3 -0.1\n0 1 2 3\n0 2 1 4\n")
        .unwrap();
    let v = tetforge(&["verify", s(&mesh)]);
    assert_eq!(v.status.code(), Some(2));
    let out = stdout(&v);
    assert!(out.starts_with("FAIL") && out.contains("circumsphere"), "{out}");
}

fn rounds_without_times(report: &serde_json::Value) -> Vec<serde_json::Value> {
    report["rounds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.as_object_mut().unwrap().remove("seconds");
            r
        })
        .collect()
}

#[test]
fn bench_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("b{run}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_tetforge"))
            .args(["bench", "-n", "20000", "--seed", "5", "--report", s(&path)])
            .env("TETFORGE_WORKERS", "3")
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["meta"]["workers"], 3);
        assert_eq!(v["meta"]["seed"], 5);
        assert!(v["tets_per_second"].as_f64().unwrap() > 0.0);
        assert!(v["extra"].as_array().unwrap().iter().any(|e| e[0] == "speedup"));
        reports.push(v);
    }
    assert!(!rounds_without_times(&reports[0]).is_empty());
    assert_eq!(rounds_without_times(&reports[0]), rounds_without_times(&reports[1]));

    let csv = dir.path().join("b.csv");
    assert!(tetforge(&["bench", "-n", "20000", "--workers", "2", "--report", s(&csv)]).status.success());
    let json = dir.path().join("b.json");
    assert!(tetforge(&["bench", "-n", "20000", "--workers", "2", "--report", s(&json)]).status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let rows = std::fs::read_to_string(&csv).unwrap().lines().count() - 1;
    assert_eq!(rows, v["rounds"].as_array().unwrap().len());
}

#[test]
fn refine_cube_and_obj() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cube.msh");
    let report = dir.path().join("r.json");
    let o = tetforge(&[
        "refine",
        "--cube",
        "6",
        "--h",
        "0.15",
        "-o",
        s(&out),
        "--workers",
        "2",
        "--report",
        s(&report),
        "--audit",
        "full",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tetforge(&["verify", s(&out)]).status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["meta"]["h"], 0.15);
    assert!(!v["refine_rounds"].as_array().unwrap().is_empty());

    let obj = dir.path().join("tet.obj");
    std::fs::write(&obj, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 2 3 4\nf 1 4 3\nf 1 2 4\nf 1 3 2\n").unwrap();
    let o = tetforge(&["refine", s(&obj), "--h", "0.2", "-o", s(&dir.path().join("t.bin"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let open = dir.path().join("open.obj");
    std::fs::write(&open, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 2 3 4\nf 1 4 3\nf 1 2 4\n").unwrap();
    assert_eq!(tetforge(&["refine", s(&open)]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xyz");
    std::fs::write(&bad, "0 0 0\n1 NaN 0\n").unwrap();
    let o = tetforge(&["triangulate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
    assert_eq!(tetforge(&["triangulate", s(&dir.path().join("missing.xyz"))]).status.code(), Some(3));
    let flat = dir.path().join("flat.xyz");
    std::fs::write(&flat, "0 0 0\n1 0 0\n0 1 0\n1 1 0\n2 3 0\n").unwrap();
    assert_eq!(tetforge(&["triangulate", s(&flat)]).status.code(), Some(4));
    assert_eq!(tetforge(&["triangulate", s(&bad), "--workers", "0"]).status.code(), Some(2));
    let junk = dir.path().join("junk.msh");
    std::fs::write(&junk, "hello\n").unwrap();
    assert_eq!(tetforge(&["verify", s(&junk)]).status.code(), Some(2));
}
