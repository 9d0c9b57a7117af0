use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use tetforge_core::{Point3, VertexId};

use super::{open, with_path};
use crate::refine::SurfaceMesh;
use crate::{Error, Result};

pub fn read_obj(path: &Path) -> Result<SurfaceMesh> {
    parse_obj(BufReader::new(open(path)?), path)
}

/// Reads `v` and `f` records of a Wavefront OBJ file. Polygons are fanned
/// into triangles and every `g` or `o` record starts a new surface tag.
pub fn parse_obj(r: impl BufRead, path: &Path) -> Result<SurfaceMesh> {
    let mut s = SurfaceMesh::default();
    let mut tag = 0u16;
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| with_path(path, e))?;
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("");
        let mut fields = body.split_whitespace();
        match fields.next() {
            Some("v") => {
                let c: Vec<f64> = fields
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::format(path, format!("line {lineno}: bad vertex")))?;
                if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::format(path, format!("line {lineno}: bad vertex")));
                }
                s.vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let n = s.vertices.len() as i64;
                let ids: Vec<VertexId> = fields
                    .map(|f| {
                        let k: i64 = f
                            .split('/')
                            .next()
                            .and_then(|x| x.parse().ok())
                            .ok_or_else(|| Error::format(path, format!("line {lineno}: bad face index `{f}`")))?;
                        // 1-based, negative counts back from the last vertex
                        let k = if k < 0 { n + k } else { k - 1 };
                        if (0..n).contains(&k) {
                            Ok(k as VertexId)
                        } else {
                            Err(Error::format(path, format!("line {lineno}: face index `{f}` out of range")))
                        }
                    })
                    .collect::<Result<_>>()?;
                if ids.len() < 3 {
                    return Err(Error::format(path, format!("line {lineno}: face with fewer than 3 vertices")));
                }
                for k in 1..ids.len() - 1 {
                    s.triangles.push([ids[0], ids[k], ids[k + 1]]);
                    s.tags.push(tag);
                }
            }
            // groups without faces share the next tag
            Some("g" | "o") if s.tags.last() == Some(&tag) => tag = tag.saturating_add(1),
            _ => {}
        }
    }
    Ok(s)
}

pub fn write_obj(path: &Path, s: &SurfaceMesh) -> Result<()> {
    let f = File::create(path).map_err(|e| with_path(path, e))?;
    let mut w = BufWriter::new(f);
    let res = (|| {
        for p in &s.vertices {
            writeln!(w, "v {:?} {:?} {:?}", p.x, p.y, p.z)?;
        }
        for t in &s.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        w.flush()
    })();
    res.map_err(|e| with_path(path, e))
}
