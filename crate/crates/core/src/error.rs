//! Error types shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input value is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A perspective view satisfying the constraints does not exist.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A raster operation needed source rows that the grid does not cover.
    #[error("coverage error: source grid is missing rows {first}..{last}")]
    MissingRows { first: usize, last: usize },

    /// A warp target pixel fell outside the perspective view's frustum.
    #[error("coverage error: pixel ({col}, {row}) escapes the view frustum")]
    FrustumEscape { col: usize, row: usize },

    #[error("config error: {0}")]
    Config(String),

    /// Too few valid sample pairs survived filtering to fit a transform.
    #[error("insufficient samples: {found} valid pairs (need at least {need})")]
    InsufficientSamples { found: usize, need: usize },

    /// The least-squares normal matrix is rank deficient.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// No partial depth map contributed to the blend target.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// The iterative solver produced a non-finite value.
    #[error("numeric error: non-finite value at pixel ({col}, {row})")]
    NonFinite { col: usize, row: usize },

    #[error("metrics error: {0}")]
    Metrics(String),

    /// Malformed Portable Float Map data.
    #[error("pfm format error at byte {offset}: {what}")]
    PfmFormat { offset: usize, what: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    /// A per-partition pipeline stage failed.
    #[error("partition {index}: {source}")]
    Partition {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing depth file: {}", .0.display())]
    MissingDepthFile(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn for_partition(index: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::Partition {
            index,
            source: Box::new(source),
        }
    }
}
