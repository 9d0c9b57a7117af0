//! Order-independent views of a mesh.

use alloc::vec::Vec;

use super::{MeshStore, VertexId};
use crate::geom::Point3;

/// Neighbor value for a facet whose neighbor is not part of the view.
pub const NO_NEIGHBOR: u64 = u64::MAX;

const EVEN_PERMS: [[usize; 4]; 12] = [
    [0, 1, 2, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [1, 0, 3, 2],
    [1, 2, 0, 3],
    [1, 3, 2, 0],
    [2, 0, 1, 3],
    [2, 1, 3, 0],
    [2, 3, 0, 1],
    [3, 0, 2, 1],
    [3, 1, 0, 2],
    [3, 2, 1, 0],
];

/// The lexicographically smallest even permutation of `t`, which keeps its
/// orientation, together with the permutation used: `out[j] = t[perm[j]]`.
pub fn canonical_tet(t: [VertexId; 4]) -> ([VertexId; 4], [usize; 4]) {
    let mut best = (t, EVEN_PERMS[0]);
    for p in &EVEN_PERMS[1..] {
        let c = p.map(|j| t[j]);
        if c < best.0 {
            best = (c, *p);
        }
    }
    best
}

/// A densely numbered copy of a mesh's live tetrahedra in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactMesh {
    pub points: Vec<Point3>,
    pub tets: Vec<[VertexId; 4]>,
    /// Packed `4t + i` references into `tets`, or [`NO_NEIGHBOR`].
    pub neighbors: Vec<[u64; 4]>,
}

impl MeshStore {
    /// Live tetrahedra renumbered in canonical order, ghosts optional.
    ///
    /// Two meshes with the same tetrahedra produce identical results no
    /// matter how their slots were laid out.
    pub fn compact(&self, include_ghosts: bool) -> CompactMesh {
        let mut entries: Vec<([VertexId; 4], u64, [usize; 4])> = self
            .live_tets()
            .filter(|&t| include_ghosts || !self.is_ghost(t))
            .map(|t| {
                let (c, p) = canonical_tet(self.tet(t));
                (c, t, p)
            })
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        let mut new_index = alloc::vec![u64::MAX; self.tet_slots() as usize];
        let mut inverse = alloc::vec![[0usize; 4]; self.tet_slots() as usize];
        for (k, (_, t, p)) in entries.iter().enumerate() {
            new_index[*t as usize] = k as u64;
            for (j, &old) in p.iter().enumerate() {
                inverse[*t as usize][old] = j;
            }
        }
        let neighbors = entries
            .iter()
            .map(|(_, t, p)| {
                p.map(|old| {
                    let r = self.neighbor(4 * t + old as u64);
                    let nt = r >> 2;
                    match new_index[nt as usize] {
                        u64::MAX => NO_NEIGHBOR,
                        k => 4 * k + inverse[nt as usize][(r & 3) as usize] as u64,
                    }
                })
            })
            .collect();
        CompactMesh { points: self.points().collect(), tets: entries.into_iter().map(|e| e.0).collect(), neighbors }
    }

    /// Sorted list of real tetrahedra as sorted vertex quadruples.
    pub fn canonical_tet_set(&self) -> Vec<[VertexId; 4]> {
        let mut v: Vec<[VertexId; 4]> = self
            .real_tets()
            .map(|t| {
                let mut q = self.tet(t);
                q.sort_unstable();
                q
            })
            .collect();
        v.sort_unstable();
        v
    }
}
