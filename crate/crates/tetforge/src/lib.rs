//! Parallel Delaunay tetrahedralization on top of `tetforge-core`.
//!
//! * [`parallel`]: the multi-threaded insertion engine and
//!   [`parallel::parallel_triangulate`],
//! * [`refine`]: surface-bounded mesh generation by circumcenter insertion,
//! * [`io`]: point, surface and mesh file formats,
//! * [`sort`]: the multi-threaded radix sort used to order points.

#![warn(missing_debug_implementations)]

pub mod error;
pub mod io;
pub mod parallel;
pub mod refine;
pub mod sort;

pub use error::{Error, Result};
