use std::path::Path;

use serde::Serialize;
use tetforge_core::kernel::KernelStats;
use tetforge_core::MeshStore;

use super::with_path;
use crate::parallel::{ParallelReport, RoundStats};
use crate::refine::RefineRound;
use crate::Result;

/// Settings a run was made with.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub input: Option<String>,
    pub output: Option<String>,
    pub workers: usize,
    pub seed: u64,
    pub k: Option<f64>,
    pub h: Option<f64>,
    pub audit: String,
    pub max_rounds: Option<usize>,
    pub version: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MeshCounts {
    pub vertices: usize,
    pub skipped: usize,
    pub real_tets: usize,
    pub ghost_tets: usize,
    /// Bytes held by the tetrahedron and vertex arrays.
    pub memory_bytes: usize,
}

impl MeshCounts {
    pub fn of(mesh: &MeshStore) -> Self {
        MeshCounts {
            vertices: mesh.num_vertices(),
            skipped: mesh.skipped().len(),
            real_tets: mesh.real_tet_count(),
            ghost_tets: mesh.ghost_tet_count(),
            memory_bytes: mesh.tet_capacity() * mesh.bytes_per_tet() + mesh.num_vertices() * 32,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
struct KernelCounts {
    inserted: u64,
    duplicates: u64,
    walk_steps: u64,
    conflict_tests: u64,
    deleted: u64,
    created: u64,
    aborted_walk: u64,
    aborted_cavity: u64,
    aborted_close: u64,
    aborted_star: u64,
    lookup_fallbacks: u64,
    mean_deleted: f64,
    mean_created: f64,
}

impl From<&KernelStats> for KernelCounts {
    fn from(k: &KernelStats) -> Self {
        let per = |x: u64| if k.inserted == 0 { 0.0 } else { x as f64 / k.inserted as f64 };
        KernelCounts {
            inserted: k.inserted,
            duplicates: k.duplicates,
            walk_steps: k.walk_steps,
            conflict_tests: k.conflict_tests,
            deleted: k.deleted,
            created: k.created,
            aborted_walk: k.aborted_walk,
            aborted_cavity: k.aborted_cavity,
            aborted_close: k.aborted_close,
            aborted_star: k.aborted_star,
            lookup_fallbacks: k.lookup_fallbacks,
            mean_deleted: per(k.deleted),
            mean_created: per(k.created),
        }
    }
}

/// Everything a command measured, written as JSON or as a CSV of rounds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub meta: RunMeta,
    /// Wall time of every phase in order.
    pub phases: Vec<(String, f64)>,
    pub rounds: Vec<RoundStats>,
    pub refine_rounds: Vec<RefineRound>,
    kernel: KernelCounts,
    pub growths: u64,
    pub mesh: MeshCounts,
    pub tets_per_second: f64,
    /// Extra named values, such as speedups.
    pub extra: Vec<(String, f64)>,
}

impl RunReport {
    pub fn new(meta: RunMeta) -> Self {
        RunReport { meta, ..RunReport::default() }
    }

    pub fn phase(&mut self, name: &str, seconds: f64) {
        self.phases.push((name.to_string(), seconds));
    }

    pub fn seconds(&self, name: &str) -> Option<f64> {
        self.phases.iter().find(|p| p.0 == name).map(|p| p.1)
    }

    pub fn set_insertion(&mut self, r: &ParallelReport) {
        self.rounds = r.rounds.clone();
        self.kernel = KernelCounts::from(&r.kernel);
        self.growths = r.growths;
    }

    /// Records final counts; the rate uses the named phase's time.
    pub fn set_mesh(&mut self, mesh: &MeshStore, timed_phase: &str) {
        self.mesh = MeshCounts::of(mesh);
        if let Some(s) = self.seconds(timed_phase).filter(|&s| s > 0.0) {
            self.tets_per_second = self.mesh.real_tets as f64 / s;
        }
    }

    pub fn mean_deleted(&self) -> f64 {
        self.kernel.mean_deleted
    }

    pub fn mean_created(&self) -> f64 {
        self.kernel.mean_created
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per insertion round.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rounds {
            w.serialize(r).expect("round serializes");
        }
        String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
    }

    /// Writes CSV for a `.csv` path and JSON otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        let body = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            self.to_csv()
        } else {
            self.to_json()
        };
        std::fs::write(path, body).map_err(|e| with_path(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::{parallel_triangulate, ParallelOptions};

    #[test]
    fn report_rows_match_rounds() {
        let mut r = tetforge_core::rng::stream(2, &[]);
        let pts = (0..5000)
            .map(|_| {
                tetforge_core::Point3::new(
                    rand::Rng::random(&mut r),
                    rand::Rng::random(&mut r),
                    rand::Rng::random(&mut r),
                )
            })
            .collect();
        let opts = ParallelOptions { workers: 3, seed: 9, ..ParallelOptions::default() };
        let (mesh, pr) = parallel_triangulate(pts, &opts).unwrap();
        let mut rep =
            RunReport::new(RunMeta { command: "triangulate".into(), workers: 3, seed: 9, ..RunMeta::default() });
        rep.phase("insert", 0.5);
        rep.set_insertion(&pr);
        rep.set_mesh(&mesh, "insert");
        assert_eq!(rep.to_csv().lines().count(), 1 + pr.rounds.len());
        assert_eq!(rep.tets_per_second, mesh.real_tet_count() as f64 * 2.0);
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(v["meta"]["seed"], 9);
        assert_eq!(v["meta"]["workers"], 3);
        assert_eq!(v["mesh"]["real_tets"], mesh.real_tet_count());
        assert_eq!(v["rounds"].as_array().unwrap().len(), pr.rounds.len());
        assert!(v["kernel"]["mean_deleted"].as_f64().unwrap() > 10.0);
    }
}
