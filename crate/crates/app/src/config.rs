use std::path::Path;

use beliefnav::{LanguageConfig, Search, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::AppError;

pub const PORT_ENV: &str = "BELIEFNAV_PORT";

/// TOML configuration: word lists, training recipe and hyperparameters, and
/// service settings. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub language: LanguageConfig,
    pub train: TrainConfig,
    pub server: ServerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub port: u16,
    /// Initial area of the simulated robot; the lowest area id when unset.
    pub start_area: Option<String>,
    pub trace_cache: usize,
    /// Adjacency tolerance in map units; one grid cell when unset.
    pub gap_tolerance: Option<f64>,
    pub search: Search,
    /// Areas listed in a ground response.
    pub ranked_areas: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            start_area: None,
            trace_cache: 128,
            gap_tolerance: None,
            search: Search::Dfs,
            ranked_areas: 10,
        }
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Input(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, AppError> {
        match path {
            Some(p) => Self::from_toml(&crate::read_text(p)?),
            None => Ok(Self::default()),
        }
    }
}
