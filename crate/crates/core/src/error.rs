//! Error type shared by every numerical stage.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("solver failed to converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("compatibility violated: source mean {mean:.3e} exceeds tolerance {tolerance:.3e}")]
    Compatibility { mean: f64, tolerance: f64 },

    #[error("tangential field is not conservative (defect {defect:.3e}, tolerance {tolerance:.3e})")]
    DecompositionInvalid { defect: f64, tolerance: f64 },

    #[error("step size {step:.3e} leaves the diffeomorphism range (min det DF = {min_det:.3e})")]
    StepSize { step: f64, min_det: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
