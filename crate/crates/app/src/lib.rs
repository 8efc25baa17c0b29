//! CLI commands and the HTTP service around the beliefnav grounding engine.

pub mod config;
pub mod server;

use std::path::Path;

use beliefnav::{load_map, office_map, AreaMap, GroundError, ModelFile};
use thiserror::Error;

/// Errors with their process exit codes.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("degenerate grounding: {0}")]
    Degenerate(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Input(_) => 2,
            AppError::Degenerate(_) => 3,
        }
    }
}

impl From<GroundError> for AppError {
    fn from(e: GroundError) -> Self {
        match e {
            GroundError::Parse(p) => AppError::Input(p.to_string()),
            step @ GroundError::Step { .. } => AppError::Degenerate(step.to_string()),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))
}

/// Loads a map file, or the bundled office map when `path` is `None`.
pub fn load_map_or_office(path: Option<&Path>) -> Result<AreaMap, AppError> {
    match path {
        None => Ok(office_map()),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| AppError::Input(format!("{}: {e}", p.display())))?;
            load_map(&bytes).map_err(|e| AppError::Input(format!("{}: {e}", p.display())))
        }
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile, AppError> {
    ModelFile::load(path).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))
}
