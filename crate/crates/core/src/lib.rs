//! Grounds implicit destination descriptions ("the meeting room near the north
//! exit") on segmented indoor maps by chaining learned belief updates, and plans
//! area-level routes to the result.

pub mod datagen;
pub mod geometry;
pub mod grounder;
pub mod language;
pub mod map;
pub mod nnet;
pub mod planner;
pub mod trainer;

pub use datagen::{gen_composite, generate_dataset, CompositeQuery, Dataset, GenConfig, TrainingSample};
pub use grounder::{ground, top_k_areas, BeliefTrace, GroundError, Hyperparams, ModelParams, UpdateType};
pub use language::{LanguageConfig, Lexicon, Modifier, ParseError, Token};
pub use map::{load_map, Area, AreaMap, BeliefGrid, MapError};
pub use planner::{build_adjacency, plan_overlay_pgm, AreaGraph, PlanError, Search};
pub use trainer::{evaluate, train, EvalReport, ModelFile, TrainConfig, TrainError};

/// The 80-area office floor plan used for training and benchmarks.
pub const OFFICE_MAP_JSON: &str = include_str!("../data/office_map.json");

pub fn office_map() -> AreaMap {
    load_map(OFFICE_MAP_JSON.as_bytes()).expect("bundled office map is valid")
}
