use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("need {needed} points, have {available}")]
    InsufficientPoints { needed: usize, available: usize },
    #[error("invalid target count {target} for a cloud of {available} points")]
    InvalidTarget { target: usize, available: usize },
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("point lies behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("no point projects inside the {width}x{height} image")]
    AllPointsCulled { width: usize, height: usize },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("image {width}x{height} is too small (need at least 3x3)")]
    ImageTooSmall { width: usize, height: usize },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("too few distinct points: {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    DegenerateCollinear,
    #[error("concave hull construction failed for every k up to {max_k}")]
    HullFailed { max_k: usize },

    #[error("empty point set")]
    EmptySet,
    #[error("polygon has {0} vertices, need at least 3")]
    TooFewVertices(usize),
    #[error("edge map is empty")]
    EmptyEdgeMap,
    #[error("empty cloud")]
    EmptyCloud,
    #[error("shape does not fit in frame: {0}")]
    ShapeOutOfFrame(String),
    #[error("calibration is {calib_width}x{calib_height} but image is {image_width}x{image_height}")]
    SizeMismatch {
        calib_width: usize,
        calib_height: usize,
        image_width: usize,
        image_height: usize,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated data: {0}")]
    TruncatedData(String),
    #[error("unsupported magic number {0:?}")]
    UnsupportedMagic(String),
    #[error("malformed data: {0}")]
    MalformedData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
