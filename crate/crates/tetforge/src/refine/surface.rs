use std::collections::HashMap;

use tetforge_core::mesh::hull_facets;
use tetforge_core::predicates::{collinear, orient3d, Sign};
use tetforge_core::{Point3, VertexId};

use crate::parallel::{parallel_triangulate, ParallelOptions};
use crate::{Error, Result};

/// Closed triangulated surface bounding the domain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[VertexId; 3]>,
    /// Surface tag of every triangle.
    pub tags: Vec<u16>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[VertexId; 3]>) -> Self {
        let tags = vec![0; triangles.len()];
        SurfaceMesh { vertices, triangles, tags }
    }

    /// Checks that the surface is a closed, consistently oriented manifold
    /// without degenerate triangles.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::Invalid("surface has no triangles".into()));
        }
        if self.tags.len() != self.triangles.len() {
            return Err(Error::Invalid("one tag per triangle expected".into()));
        }
        if let Some(i) = self.vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Invalid(format!("surface vertex {i} is not finite")));
        }
        // directed edge -> count
        let mut directed: HashMap<(VertexId, VertexId), u32> = HashMap::with_capacity(3 * self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= n) {
                return Err(Error::Invalid(format!("triangle {i} references a missing vertex")));
            }
            let p = t.map(|v| self.vertices[v as usize]);
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || collinear(p[0], p[1], p[2]) {
                return Err(Error::Invalid(format!("triangle {i} is degenerate")));
            }
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &c) in &directed {
            if c > 1 {
                return Err(Error::Invalid(format!(
                    "surface is not orientable: edge {a}-{b} is used twice in the same direction"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::Invalid(format!("surface is not closed: edge {a}-{b} has one triangle")));
            }
        }
        Ok(())
    }

    /// Mean length of the edges at every vertex.
    pub fn vertex_spacing(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.vertices.len()];
        let mut count = vec![0u32; self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k] as usize, t[(k + 1) % 3] as usize);
                let d = self.vertices[a].dist2(self.vertices[b]).sqrt();
                sum[a] += d;
                sum[b] += d;
                count[a] += 1;
                count[b] += 1;
            }
        }
        sum.iter().zip(&count).map(|(s, &c)| if c == 0 { 0.0 } else { s / f64::from(c) }).collect()
    }
}

/// Surface of `[0, 1]^3` with `divisions` grid cells along every edge.
///
/// The squares of the grid are split along the diagonals the Delaunay
/// triangulation of the grid points picks, so the surface is always
/// present in it.
pub fn cube_surface(divisions: usize, workers: usize) -> Result<SurfaceMesh> {
    let d = divisions.max(1);
    let mut pts = Vec::new();
    for i in 0..=d {
        for j in 0..=d {
            for k in 0..=d {
                if [i, j, k].iter().any(|&c| c == 0 || c == d) {
                    pts.push(Point3::new(i as f64 / d as f64, j as f64 / d as f64, k as f64 / d as f64));
                }
            }
        }
    }
    let opts = ParallelOptions { workers, ..ParallelOptions::default() };
    let (mesh, _) = parallel_triangulate(pts.clone(), &opts)?;
    let center = Point3::new(0.5, 0.5, 0.5);
    let triangles = hull_facets(&mesh)
        .into_iter()
        .map(|[a, b, c]| {
            let p = [a, b, c].map(|v| pts[v as usize]);
            // interior on the negative side, as for `FACET`
            if orient3d(p[0], p[1], p[2], center) == Sign::Negative {
                [a, b, c]
            } else {
                [a, c, b]
            }
        })
        .collect();
    Ok(SurfaceMesh::new(pts, triangles))
}
