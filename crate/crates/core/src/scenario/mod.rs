//! Reproducible experiment runs: configuration, runners and file output.

mod config;
mod output;
mod runner;

use thiserror::Error;

use crate::dicke::DickeError;
use crate::lindblad::EngineError;
use crate::observables::ExtractionError;
use crate::wigner::WignerError;

pub use config::{
    CatConfig, FourCatConfig, InitialState, IntegratorConfig, OutputConfig, ScenarioConfig, ScenarioKind,
    StationaryConfig, SweepConfig, TimeConfig,
};
pub use output::{sha256_file, write_csv, write_json, RunManifest};
pub use runner::{
    four_cat_snapshots, run_scenario, simulate_two_cat, sweep_cells, tetrahedron_edges, CellStatus,
    EdgeContrast, FourCatSnapshot, LobePosition, RunReport, StationaryReport, SweepCell, TwoCatTimescales,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("extraction failure: {0}")]
    Extraction(#[from] ExtractionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Numerical(_) => 3,
            ScenarioError::Extraction(_) => 4,
            ScenarioError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioError::Config(_) => "config",
            ScenarioError::Numerical(_) => "numerical",
            ScenarioError::Extraction(_) => "extraction",
            ScenarioError::Io(_) => "io",
        }
    }
}

impl From<EngineError> for ScenarioError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidParams(m) => ScenarioError::Config(m),
            other => ScenarioError::Numerical(other.to_string()),
        }
    }
}

impl From<DickeError> for ScenarioError {
    fn from(e: DickeError) -> Self {
        ScenarioError::Config(e.to_string())
    }
}

impl From<WignerError> for ScenarioError {
    fn from(e: WignerError) -> Self {
        ScenarioError::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Io(e.into())
    }
}
