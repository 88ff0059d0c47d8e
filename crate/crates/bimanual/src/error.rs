//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An input value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Geometry too degenerate to solve (collinear/coincident points,
    /// zero-length bones, coincident point sets).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Mesh is not watertight (an edge is not shared by exactly two
    /// consistently oriented faces).
    #[error("mesh topology error: {0}")]
    Topology(String),

    /// Array or matrix dimensions do not match.
    #[error("dimension mismatch for {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    /// A required ground-truth or document field is absent.
    #[error("missing field: {0}")]
    MissingField(String),

    /// A computed quantity became NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Metric requested on an empty selection (e.g. no valid joints).
    #[error("empty metric: {0}")]
    EmptyMetric(String),

    /// Scene document version is not supported.
    #[error("unsupported document version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    /// Scene document could not be parsed.
    #[error("malformed document: {0}")]
    Malformed(String),

    /// Scene generation failed to satisfy its constraints.
    #[error("scene generation failed: {0}")]
    GenerationFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
