use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point x = {x} outside domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("tridiagonal solver breakdown at row {row}: zero pivot")]
    SolverBreakdown { row: usize },

    #[error("Lanczos breakdown at step {step} (|beta| = {beta_abs:.3e})")]
    LanczosBreakdown { step: usize, beta_abs: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("rank-deficient least-squares system (rank {rank} < {cols} unknowns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("evaluation point s = {0} hits a pole of the model")]
    PoleHit(num_complex::Complex<f64>),

    #[error("value {value} outside range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
