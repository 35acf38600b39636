//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // geometry
    #[error("empty input")]
    EmptyInput,
    #[error("degenerate extent")]
    DegenerateExtent,
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("invalid rigid pose: {0}")]
    InvalidPose(String),
    #[error("eta must be positive, got {0}")]
    InvalidEta(f64),

    // view codec
    #[error("unnormalized input: {0:?} outside [0,1]^3")]
    UnnormalizedInput([f64; 3]),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("cube not in frustum")]
    CubeNotInFrustum,
    #[error("nothing visible")]
    NothingVisible,
    #[error("empty view")]
    EmptyView,

    // latent codec
    #[error("invalid latent config: {0}")]
    InvalidLatentConfig(String),
    #[error("no visible geometry")]
    NoVisibleGeometry,
    #[error("empty decode")]
    EmptyDecode,
    #[error("latent dimension mismatch: expected {expected}, got {got}")]
    LatentDimMismatch { expected: usize, got: usize },

    // flow
    #[error("invalid flow input: {0}")]
    InvalidFlowInput(String),
    #[error("divergence at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("solver blow-up at step {step}")]
    SolverBlowUp { step: usize },
    #[error("empty batch")]
    EmptyBatch,

    // persistence
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported version {got} (expected {expected})")]
    UnsupportedVersion { expected: u16, got: u16 },
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("dimension mismatch in file: {0}")]
    FileDimMismatch(String),
    #[error("malformed file: {0}")]
    MalformedFile(String),

    // harness
    #[error("invalid shape spec: {0}")]
    InvalidShapeSpec(String),
    #[error("fracture failed: could not produce >= 2 non-empty pieces in {attempts} attempts")]
    FractureFailed { attempts: usize },
    #[error("no present pieces")]
    NoPresentPieces,
    #[error("invalid run config: {0}")]
    InvalidRunConfig(String),
    #[error("run directory is locked: {0}")]
    RunDirLocked(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl Error {
    /// Wrap an error with the name of the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
