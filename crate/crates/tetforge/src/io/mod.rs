//! Point, surface and mesh files, and run reports.

mod mesh;
mod points;
mod report;
mod surface;

use std::fs::File;
use std::path::Path;

pub use mesh::{read_binary, read_mesh, read_msh, read_text, write_mesh, MeshFormat, MESH_MAGIC};
pub use points::{parse_binary, parse_text, read_points, write_points, PointFormat, POINTS_MAGIC};
pub use report::{MeshCounts, RunMeta, RunReport};
pub use surface::{parse_obj, read_obj, write_obj};

use crate::{Error, Result};

pub(crate) fn with_path(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(path, e))
}
