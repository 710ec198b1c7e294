use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate covariance [[{xx}, {xy}], [{xy}, {yy}]]: not positive definite")]
    DegenerateCovariance { xx: f64, xy: f64, yy: f64 },

    #[error("PLY parse error at byte {offset}: {message}")]
    Ply { offset: u64, message: String },

    #[error("invalid camera: {0}")]
    Camera(String),

    #[error("unsupported SH coefficient count {0} (expected 1, 4, 9 or 16 per channel)")]
    ShBands(usize),

    #[error("image dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("camera JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
