//! Core of the tetforge 3D Delaunay tetrahedralizer.
//!
//! This crate needs only `alloc`. It provides
//!
//! * [`predicates`]: filtered and exact `orient3d` / `in_sphere`, cached
//!   in-sphere minors and symbolic perturbation,
//! * [`sfc`]: Moore-curve indices, grid transforms, radix sort and BRIO
//!   round planning,
//! * [`mesh`]: the flat tetrahedral mesh store with ghost tetrahedra and its
//!   audit,
//! * [`kernel`]: point location, cavity construction and retriangulation,
//!   plus the sequential [`kernel::triangulate`] driver.
//!
//! Threads, files and the command line live in the `tetforge` crate.

#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod geom;
pub mod kernel;
pub mod mesh;
pub mod predicates;
pub mod rng;
pub mod sfc;

pub use geom::{Aabb, Point3};
pub use kernel::{triangulate, TriangulateOptions, TriangulationStats};
pub use mesh::{MeshStore, ScratchMode, TetFacetRef, VertexId, GHOST};
pub use predicates::{Sign, SubDeterminants};

/// Errors reported by the core algorithms.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("too many points for 32-bit vertex ids: {0}")]
    TooManyPoints(usize),
    #[error("point {incoming} duplicates point {existing}")]
    DuplicatePoint { existing: u32, incoming: u32 },
    #[error("point outside the bounding box")]
    OutsideBox,
    #[error("out of memory growing the tetrahedron arrays")]
    Allocation,
}

pub type Result<T> = core::result::Result<T, Error>;
