use std::io;

use thiserror::Error;

/// Errors raised across the simulation, beamforming and correction stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("scatterer {index} at z = {z:.6} m falls outside the {duration:.3e} s trace window")]
    Window { index: usize, z: f64, duration: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("peak or half-maximum crossing on the grid boundary: {0}")]
    Boundary(String),

    #[error("patch {patch} has {n_pixels} pixels, fewer than the {n_angles} angles it must resolve")]
    PatchTooSmall {
        patch: usize,
        n_pixels: usize,
        n_angles: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) => 2,
            Error::Window { .. }
            | Error::Boundary(_)
            | Error::PatchTooSmall { .. }
            | Error::Degenerate(_)
            | Error::Fit(_) => 3,
            Error::Format(_) | Error::Io(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    /// Tag the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
