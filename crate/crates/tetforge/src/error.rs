use tetforge_core::mesh::AuditError;

/// Errors reported by the `tetforge` crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] tetforge_core::Error),
    #[error("audit failed: {0}")]
    Audit(#[from] AuditError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// Malformed file contents.
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    /// Inputs that cannot be meshed as given.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Boundary triangles that are not facets of the triangulation of the
    /// boundary vertices.
    #[error("boundary recovery required: {missing} boundary triangles are not in the triangulation")]
    BoundaryRecovery { missing: usize, first: [u32; 3] },
    #[error("worker {0} panicked")]
    WorkerPanic(usize),
}

impl Error {
    pub(crate) fn format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        Error::Format { path: path.display().to_string(), msg: msg.into() }
    }

    /// Process exit code: 2 for rejected input or a failed audit, 3 for IO, 4 for degenerate
    /// geometry, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use tetforge_core::Error as C;
        match self {
            Error::Format { .. } | Error::Invalid(_) | Error::BoundaryRecovery { .. } | Error::Audit(_) => 2,
            Error::Core(C::NonFinite { .. } | C::TooManyPoints(_) | C::OutsideBox) => 2,
            Error::Io { .. } => 3,
            Error::Core(C::DegenerateInput(_) | C::TooFewPoints(_) | C::DuplicatePoint { .. }) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
