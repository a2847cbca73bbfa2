use std::path::PathBuf;

/// Errors raised across the planning and estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not a rotation: {0}")]
    InvalidRotation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gram matrix is ill-conditioned: cholesky failed with jitter up to {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },

    #[error("relative rotation angle {angle} rad is too close to pi for the rotation-vector chart")]
    ChartSingular { angle: f64 },

    #[error("unknown landmark id {0}")]
    UnknownLandmark(u32),

    #[error("singular boundary constraint system (duration {duration})")]
    SingularConstraints { duration: f64 },

    #[error("no feasible edge from the tree after {attempts} consecutive attempts")]
    NoFeasibleEdge { attempts: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
