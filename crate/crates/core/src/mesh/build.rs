use alloc::vec::Vec;

use super::{MeshStore, TetFacetRef, VertexId, FACET, GHOST};
use crate::{Error, Result};

fn facet_key(t: &[VertexId; 4], i: usize) -> [VertexId; 3] {
    let mut k = [t[FACET[i][0]], t[FACET[i][1]], t[FACET[i][2]]];
    k.sort_unstable();
    k
}

/// Pairs slots sharing a facet key; returns the unpaired slots.
fn pair_up(m: &mut MeshStore, mut keys: Vec<([VertexId; 3], u64)>) -> Result<Vec<u64>> {
    keys.sort_unstable();
    let mut open = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        if i + 1 < keys.len() && keys[i].0 == keys[i + 1].0 {
            if i + 2 < keys.len() && keys[i + 2].0 == keys[i].0 {
                return Err(Error::DegenerateInput("facet shared by more than two tetrahedra"));
            }
            m.set_adjacent(TetFacetRef(keys[i].1), TetFacetRef(keys[i + 1].1));
            i += 2;
        } else {
            open.push(keys[i].1);
            i += 1;
        }
    }
    Ok(open)
}

/// Appends positively oriented real tetrahedra, links them, and closes the
/// hull with ghost tetrahedra.
pub(super) fn connect(m: &mut MeshStore, tets: &[[VertexId; 4]], color: u16) -> Result<()> {
    let range = m.allocate_tets(tets.len())?;
    let mut keys = Vec::with_capacity(4 * tets.len());
    for (t, v) in range.clone().zip(tets) {
        m.write_tet(t, *v, color);
        for i in 0..4 {
            keys.push((facet_key(v, i), 4 * t + i as u64));
        }
    }
    let hull = pair_up(m, keys)?;

    let ghosts = m.allocate_tets(hull.len())?;
    let mut keys = Vec::with_capacity(3 * hull.len());
    for (g, &slot) in ghosts.zip(&hull) {
        let t = m.tet(slot >> 2);
        let f = FACET[(slot & 3) as usize];
        let v = [GHOST, t[f[1]], t[f[0]], t[f[2]]];
        m.write_tet(g, v, color);
        m.set_adjacent(TetFacetRef(slot), TetFacetRef::new(g, 0));
        for i in 1..4 {
            keys.push((facet_key(&v, i), 4 * g + i as u64));
        }
    }
    if !pair_up(m, keys)?.is_empty() {
        return Err(Error::DegenerateInput("hull is not a closed surface"));
    }
    Ok(())
}
