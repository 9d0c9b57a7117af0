use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use tetforge_core::mesh::{canonical_tet, color, CompactMesh, RawMesh};
use tetforge_core::{MeshStore, Point3, ScratchMode, VertexId, GHOST};

use super::{open, with_path};
use crate::{Error, Result};

/// Leading bytes of a binary mesh file; the last byte is the version.
pub const MESH_MAGIC: [u8; 8] = *b"TFMESH\0\x01";
const FLAG_GHOSTS: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    /// MSH 4.1 ASCII with nodes and tetrahedra only.
    Msh,
    Binary,
    /// Counts, then one vertex and one tetrahedron per line.
    Text,
}

impl MeshFormat {
    pub fn detect(path: &Path) -> Result<Self> {
        let mut head = [0u8; 11];
        let mut f = open(path)?;
        let n = f.read(&mut head).map_err(|e| with_path(path, e))?;
        if n >= 7 && head[..7] == MESH_MAGIC[..7] {
            Ok(MeshFormat::Binary)
        } else if head[..n].starts_with(b"$MeshFormat") {
            Ok(MeshFormat::Msh)
        } else if n > 0 && head[..n].starts_with(&TEXT_HEADER.as_bytes()[..n.min(TEXT_HEADER.len())]) {
            Ok(MeshFormat::Text)
        } else {
            Err(Error::format(path, "offset 0: not a mesh file"))
        }
    }

    /// By extension: `.msh`, `.txt`, anything else is binary.
    pub fn from_extension(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("msh") => MeshFormat::Msh,
            Some("txt") => MeshFormat::Text,
            _ => MeshFormat::Binary,
        }
    }
}

const TEXT_HEADER: &str = "tetforge-mesh 1";

/// Color of every tetrahedron keyed by its canonical vertex order, with the
/// facet flags permuted to match.
fn canonical_colors(mesh: &MeshStore) -> HashMap<[VertexId; 4], u16> {
    mesh.live_tets()
        .map(|t| {
            let (c, perm) = canonical_tet(mesh.tet(t));
            let old = mesh.color(t);
            let mut new = old & !color::FLAGS;
            for (j, &i) in perm.iter().enumerate() {
                if old & color::facet_flag(i) != 0 {
                    new |= color::facet_flag(j);
                }
            }
            (c, new)
        })
        .collect()
}

/// Applies colors stored in canonical order to a mesh built from the same
/// tetrahedra.
fn restore_colors(mesh: &mut MeshStore, colors: &HashMap<[VertexId; 4], u16>) {
    let live: Vec<u64> = mesh.live_tets().collect();
    for t in live {
        let (c, perm) = canonical_tet(mesh.tet(t));
        let Some(&stored) = colors.get(&c) else {
            continue;
        };
        let mut new = stored & !color::FLAGS;
        for (j, &i) in perm.iter().enumerate() {
            if stored & color::facet_flag(j) != 0 {
                new |= color::facet_flag(i);
            }
        }
        mesh.set_color(t, new);
    }
}

/// Writes the live tetrahedra in canonical order, so meshes with the same
/// tetrahedra give identical files. Ghosts are included on request.
pub fn write_mesh(path: &Path, mesh: &MeshStore, format: MeshFormat, ghosts: bool) -> Result<()> {
    let compact = mesh.compact(ghosts);
    let f = File::create(path).map_err(|e| with_path(path, e))?;
    let mut w = BufWriter::new(f);
    let res = match format {
        MeshFormat::Msh => write_msh(&mut w, &compact),
        MeshFormat::Text => write_text(&mut w, &compact),
        MeshFormat::Binary => {
            let colors = canonical_colors(mesh);
            write_binary(&mut w, mesh, &compact, &colors, ghosts)
        }
    };
    res.and_then(|()| w.flush()).map_err(|e| with_path(path, e))
}

fn write_msh(w: &mut impl Write, m: &CompactMesh) -> std::io::Result<()> {
    let n = m.points.len();
    writeln!(w, "$MeshFormat\n4.1 0 8\n$EndMeshFormat")?;
    writeln!(w, "$Nodes\n1 {n} 1 {n}\n3 1 0 {n}")?;
    for i in 1..=n {
        writeln!(w, "{i}")?;
    }
    for p in &m.points {
        writeln!(w, "{:?} {:?} {:?}", p.x, p.y, p.z)?;
    }
    writeln!(w, "$EndNodes")?;
    let t = m.tets.len();
    writeln!(w, "$Elements\n1 {t} 1 {t}\n3 1 4 {t}")?;
    for (k, v) in m.tets.iter().enumerate() {
        // node tags are 1-based; the ghost keeps its sentinel
        let tag = |x: VertexId| if x == GHOST { u64::from(GHOST) } else { u64::from(x) + 1 };
        writeln!(w, "{} {} {} {} {}", k + 1, tag(v[0]), tag(v[1]), tag(v[2]), tag(v[3]))?;
    }
    writeln!(w, "$EndElements")
}

fn write_text(w: &mut impl Write, m: &CompactMesh) -> std::io::Result<()> {
    writeln!(w, "{TEXT_HEADER}\n{} {}", m.points.len(), m.tets.len())?;
    for p in &m.points {
        writeln!(w, "{:?} {:?} {:?}", p.x, p.y, p.z)?;
    }
    for t in &m.tets {
        writeln!(w, "{} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    Ok(())
}

fn write_binary(
    w: &mut impl Write,
    mesh: &MeshStore,
    m: &CompactMesh,
    colors: &HashMap<[VertexId; 4], u16>,
    ghosts: bool,
) -> std::io::Result<()> {
    w.write_all(&MESH_MAGIC)?;
    w.write_all(&(if ghosts { FLAG_GHOSTS } else { 0 }).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for count in [m.points.len(), m.tets.len(), mesh.skipped().len()] {
        w.write_all(&(count as u64).to_le_bytes())?;
    }
    for p in &m.points {
        for x in [p.x, p.y, p.z] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for t in &m.tets {
        for v in t {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for n in &m.neighbors {
        for r in n {
            w.write_all(&r.to_le_bytes())?;
        }
    }
    for t in &m.tets {
        w.write_all(&colors.get(t).copied().unwrap_or(0).to_le_bytes())?;
    }
    for v in mesh.skipped() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<MeshStore> {
    let f = open(path)?;
    match MeshFormat::detect(path)? {
        MeshFormat::Binary => read_binary(BufReader::new(f), path),
        MeshFormat::Msh => read_msh(BufReader::new(f), path),
        MeshFormat::Text => read_text(BufReader::new(f), path),
    }
}

/// Vertices no tetrahedron uses that repeat a used vertex.
fn unused_duplicates(points: &[Point3], tets: &[[VertexId; 4]]) -> Vec<VertexId> {
    let mut used = vec![false; points.len()];
    for &v in tets.iter().flatten() {
        if v != GHOST {
            used[v as usize] = true;
        }
    }
    let key = |p: &Point3| [p.x, p.y, p.z].map(f64::to_bits);
    let present: std::collections::HashSet<[u64; 3]> =
        points.iter().zip(&used).filter(|(_, &u)| u).map(|(p, _)| key(p)).collect();
    (0..points.len()).filter(|&i| !used[i] && present.contains(&key(&points[i]))).map(|i| i as VertexId).collect()
}

/// Reads the text format; ghost tetrahedra in it are dropped and rebuilt.
pub fn read_text(r: impl BufRead, path: &Path) -> Result<MeshStore> {
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(e))) => Err(with_path(path, e)),
            None => Err(Error::format(path, "unexpected end of file")),
        }
    };
    let (_, head) = next()?;
    if head.trim() != TEXT_HEADER {
        return Err(Error::format(path, "line 1: not a text mesh"));
    }
    let (i, counts) = next()?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(path, format!("line {i}: bad counts")))?;
    let [n, t] = counts[..] else {
        return Err(Error::format(path, format!("line {i}: expected two counts")));
    };
    let mut points = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let (i, l) = next()?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(path, format!("line {i}: bad vertex")))?;
        if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(Error::format(path, format!("line {i}: bad vertex")));
        }
        points.push(Point3::new(c[0], c[1], c[2]));
    }
    let mut tets = Vec::with_capacity(t.min(1 << 24));
    for _ in 0..t {
        let (i, l) = next()?;
        let v: Vec<VertexId> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(path, format!("line {i}: bad tetrahedron")))?;
        let [a, b, c, d] = v[..] else {
            return Err(Error::format(path, format!("line {i}: expected 4 vertex ids")));
        };
        if [a, b, c, d].iter().any(|&x| x != GHOST && x as usize >= n) {
            return Err(Error::format(path, format!("line {i}: vertex id out of range")));
        }
        if !v.contains(&GHOST) {
            tets.push([a, b, c, d]);
        }
    }
    let skipped = unused_duplicates(&points, &tets);
    rebuild(points, &tets, skipped, None)
}

struct Cursor<R> {
    r: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, path: &Path, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.r.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => {
                Error::format(path, format!("offset {}: file ends inside {what}", self.offset))
            }
            _ => with_path(path, e),
        })?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u16(&mut self, path: &Path, what: &str) -> Result<u16> {
        self.bytes(path, what).map(u16::from_le_bytes)
    }

    fn u32(&mut self, path: &Path, what: &str) -> Result<u32> {
        self.bytes(path, what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, path: &Path, what: &str) -> Result<u64> {
        self.bytes(path, what).map(u64::from_le_bytes)
    }

    fn count(&mut self, path: &Path, what: &str) -> Result<usize> {
        let at = self.offset;
        usize::try_from(self.u64(path, what)?)
            .map_err(|_| Error::format(path, format!("offset {at}: {what} too large")))
    }
}

pub fn read_binary(r: impl Read, path: &Path) -> Result<MeshStore> {
    let mut c = Cursor { r, offset: 0 };
    let magic: [u8; 8] = c.bytes(path, "the header")?;
    if magic[..7] != MESH_MAGIC[..7] {
        return Err(Error::format(path, "offset 0: not a binary mesh"));
    }
    if magic[7] != MESH_MAGIC[7] {
        return Err(Error::format(path, format!("offset 7: unsupported version {}", magic[7])));
    }
    let flags = c.u32(path, "the header")?;
    c.u32(path, "the header")?;
    let n = c.count(path, "the vertex count")?;
    let t = c.count(path, "the tetrahedron count")?;
    let s = c.count(path, "the skipped count")?;
    let mut points = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let mut xyz = [0.0; 3];
        for x in &mut xyz {
            *x = f64::from_bits(c.u64(path, "a vertex")?);
        }
        points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut tets = Vec::with_capacity(t.min(1 << 24));
    for _ in 0..t {
        let mut v = [0; 4];
        for x in &mut v {
            *x = c.u32(path, "a tetrahedron")?;
        }
        tets.push(v);
    }
    let mut neighbors = Vec::with_capacity(t.min(1 << 24));
    for _ in 0..t {
        let mut v = [0; 4];
        for x in &mut v {
            *x = c.u64(path, "the neighbors")?;
        }
        neighbors.push(v);
    }
    let mut colors = Vec::with_capacity(t.min(1 << 24));
    for _ in 0..t {
        colors.push(c.u16(path, "the colors")?);
    }
    let mut skipped = Vec::with_capacity(s.min(1 << 24));
    for _ in 0..s {
        skipped.push(c.u32(path, "the skipped vertices")?);
    }
    let mut extra = [0u8; 1];
    if c.r.read(&mut extra).map_err(|e| with_path(path, e))? != 0 {
        return Err(Error::format(path, format!("offset {}: trailing bytes", c.offset)));
    }
    if colors.iter().any(|&x| x & color::MARK != 0) {
        return Err(Error::format(path, "deleted tetrahedron in a compact mesh"));
    }

    if flags & FLAG_GHOSTS != 0 {
        let slots = t as u64;
        if neighbors.iter().flatten().any(|&r| r >> 2 >= slots) {
            return Err(Error::format(path, "neighbor reference out of range"));
        }
        let raw = RawMesh { points, tet_vertices: tets, tet_neighbors: neighbors, colors, free: Vec::new(), skipped };
        return Ok(MeshStore::from_raw(raw, ScratchMode::Colors)?);
    }
    let colors: HashMap<[VertexId; 4], u16> = tets.iter().copied().zip(colors).collect();
    rebuild(points, &tets, skipped, Some(&colors))
}

/// Mesh from real tetrahedra, adding adjacency and ghosts.
fn rebuild(
    points: Vec<Point3>,
    tets: &[[VertexId; 4]],
    skipped: Vec<VertexId>,
    colors: Option<&HashMap<[VertexId; 4], u16>>,
) -> Result<MeshStore> {
    if tets.iter().flatten().any(|&v| v == GHOST) {
        return Err(Error::Invalid("ghost tetrahedron among the real ones".into()));
    }
    let mesh = MeshStore::from_tets(points, tets, ScratchMode::Colors)?;
    let mut raw = mesh.into_raw();
    raw.skipped = skipped;
    let mut mesh = MeshStore::from_raw(raw, ScratchMode::Colors)?;
    if let Some(c) = colors {
        restore_colors(&mut mesh, c);
    }
    Ok(mesh)
}

/// Reads the nodes and tetrahedra of an MSH 4.1 ASCII file. Ghost elements
/// are dropped and rebuilt; vertices used by no tetrahedron that repeat
/// another vertex are treated as skipped duplicates.
pub fn read_msh(r: impl BufRead, path: &Path) -> Result<MeshStore> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l.trim().to_string())),
            Some((_, Err(e))) => Err(with_path(path, e)),
            None => Err(Error::format(path, format!("file ends before {what}"))),
        }
    };
    let nums = |lineno: usize, l: &str, k: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(path, format!("line {lineno}: expected numbers")))?;
        if v.len() < k {
            return Err(Error::format(path, format!("line {lineno}: expected {k} values")));
        }
        Ok(v)
    };
    let int = |x: f64, lineno: usize| -> Result<u64> {
        if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
            Ok(x as u64)
        } else {
            Err(Error::format(path, format!("line {lineno}: expected a tag")))
        }
    };

    let mut index: HashMap<u64, VertexId> = HashMap::new();
    let mut points = Vec::new();
    let mut tets = Vec::new();
    let mut tags: Vec<u64> = Vec::new();
    loop {
        let (lineno, l) = match next("the end") {
            Ok(x) => x,
            Err(Error::Format { .. }) => break,
            Err(e) => return Err(e),
        };
        match l.as_str() {
            "$MeshFormat" => {
                let (i, v) = next("the format line")?;
                if !v.starts_with("4.1 0") {
                    return Err(Error::format(path, format!("line {i}: only ASCII MSH 4.1 is read")));
                }
            }
            "$Nodes" => {
                let (i, h) = next("the nodes header")?;
                let blocks = int(nums(i, &h, 4)?[0], i)?;
                for _ in 0..blocks {
                    let (i, b) = next("a node block")?;
                    let b = nums(i, &b, 4)?;
                    let count = int(b[3], i)? as usize;
                    tags.clear();
                    for _ in 0..count {
                        let (i, t) = next("a node tag")?;
                        tags.push(int(nums(i, &t, 1)?[0], i)?);
                    }
                    for &tag in &tags {
                        let (i, c) = next("node coordinates")?;
                        let c = nums(i, &c, 3)?;
                        if c[..3].iter().any(|x| !x.is_finite()) {
                            return Err(Error::format(path, format!("line {i}: coordinate is not finite")));
                        }
                        if index.insert(tag, points.len() as VertexId).is_some() {
                            return Err(Error::format(path, format!("line {i}: node {tag} repeated")));
                        }
                        points.push(Point3::new(c[0], c[1], c[2]));
                    }
                }
            }
            "$Elements" => {
                let (i, h) = next("the elements header")?;
                let blocks = int(nums(i, &h, 4)?[0], i)?;
                for _ in 0..blocks {
                    let (i, b) = next("an element block")?;
                    let b = nums(i, &b, 4)?;
                    let kind = int(b[2], i)?;
                    for _ in 0..int(b[3], i)? {
                        let (i, e) = next("an element")?;
                        if kind != 4 {
                            continue;
                        }
                        let e = nums(i, &e, 5)?;
                        let node = |k: usize| -> Result<Option<VertexId>> {
                            let tag = int(e[k], i)?;
                            if tag == u64::from(GHOST) {
                                return Ok(None);
                            }
                            index
                                .get(&tag)
                                .copied()
                                .map(Some)
                                .ok_or_else(|| Error::format(path, format!("line {i}: unknown node {tag}")))
                        };
                        let v = [node(1)?, node(2)?, node(3)?, node(4)?];
                        if let [Some(a), Some(b), Some(c), Some(d)] = v {
                            tets.push([a, b, c, d]);
                        }
                    }
                }
            }
            _ if l.starts_with('$') || l.is_empty() => {}
            _ if lineno == 1 => return Err(Error::format(path, "line 1: not an MSH file")),
            _ => {}
        }
    }
    if tets.is_empty() {
        return Err(Error::format(path, "no tetrahedra"));
    }
    let skipped = unused_duplicates(&points, &tets);
    rebuild(points, &tets, skipped, None)
}
