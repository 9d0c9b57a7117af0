use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use tetforge_core::Point3;

use super::{open, with_path};
use crate::{Error, Result};

/// Leading bytes of a binary point file.
pub const POINTS_MAGIC: [u8; 8] = *b"TFPTS\0\0\x01";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointFormat {
    /// One `x y z` per line, `#` starts a comment.
    Text,
    Binary,
}

impl PointFormat {
    /// Binary when the file starts with the magic, text otherwise.
    pub fn detect(path: &Path) -> Result<Self> {
        let mut head = [0u8; 8];
        let mut f = open(path)?;
        let n = read_up_to(&mut f, &mut head).map_err(|e| with_path(path, e))?;
        Ok(if n == 8 && head == POINTS_MAGIC { PointFormat::Binary } else { PointFormat::Text })
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..])? {
            0 => break,
            k => got += k,
        }
    }
    Ok(got)
}

pub fn read_points(path: &Path, format: Option<PointFormat>) -> Result<Vec<Point3>> {
    let format = match format {
        Some(f) => f,
        None => PointFormat::detect(path)?,
    };
    let f = open(path)?;
    match format {
        PointFormat::Text => parse_text(BufReader::new(f), path),
        PointFormat::Binary => parse_binary(BufReader::new(f), path),
    }
}

pub fn parse_text(r: impl BufRead, path: &Path) -> Result<Vec<Point3>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| with_path(path, e))?;
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::format(path, format!("line {lineno}: expected 3 coordinates, found {}", fields.len())));
        }
        let mut c = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            let x: f64 = f.parse().map_err(|_| Error::format(path, format!("line {lineno}: `{f}` is not a number")))?;
            if !x.is_finite() {
                return Err(Error::format(path, format!("line {lineno}: coordinate `{f}` is not finite")));
            }
            c[k] = x;
        }
        out.push(Point3::new(c[0], c[1], c[2]));
    }
    Ok(out)
}

pub fn parse_binary(mut r: impl Read, path: &Path) -> Result<Vec<Point3>> {
    let mut head = [0u8; 16];
    let got = read_up_to(&mut r, &mut head).map_err(|e| with_path(path, e))?;
    if got < 16 || head[..8] != POINTS_MAGIC {
        return Err(Error::format(path, "offset 0: missing point file header"));
    }
    let count = u64::from_le_bytes(head[8..].try_into().expect("8 bytes"));
    let count = usize::try_from(count).map_err(|_| Error::format(path, "offset 8: point count too large"))?;
    let mut out = Vec::with_capacity(count.min(1 << 24));
    let mut buf = [0u8; 24];
    for i in 0..count {
        let offset = 16 + 24 * i;
        let got = read_up_to(&mut r, &mut buf).map_err(|e| with_path(path, e))?;
        if got < 24 {
            return Err(Error::format(path, format!("offset {}: file ends inside point {i} of {count}", offset + got)));
        }
        let c: [f64; 3] =
            std::array::from_fn(|k| f64::from_le_bytes(buf[8 * k..8 * k + 8].try_into().expect("8 bytes")));
        if let Some(k) = c.iter().position(|x| !x.is_finite()) {
            return Err(Error::format(path, format!("offset {}: point {i} is not finite", offset + 8 * k)));
        }
        out.push(Point3::new(c[0], c[1], c[2]));
    }
    let mut extra = [0u8; 1];
    if read_up_to(&mut r, &mut extra).map_err(|e| with_path(path, e))? != 0 {
        return Err(Error::format(path, format!("offset {}: trailing bytes", 16 + 24 * count)));
    }
    Ok(out)
}

pub fn write_points(path: &Path, points: &[Point3], format: PointFormat) -> Result<()> {
    let f = File::create(path).map_err(|e| with_path(path, e))?;
    let mut w = BufWriter::new(f);
    let res = match format {
        PointFormat::Text => points.iter().try_for_each(|p| writeln!(w, "{:?} {:?} {:?}", p.x, p.y, p.z)),
        PointFormat::Binary => (|| {
            w.write_all(&POINTS_MAGIC)?;
            w.write_all(&(points.len() as u64).to_le_bytes())?;
            for p in points {
                for x in [p.x, p.y, p.z] {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Ok(())
        })(),
    };
    res.and_then(|()| w.flush()).map_err(|e| with_path(path, e))
}
