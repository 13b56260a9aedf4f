//! Closed-loop experiments: the map-and-navigate episode, the fine-tuning
//! and batched baselines, metric computation, and file exports.

mod config;
mod metrics;
mod report;
mod run;

pub use config::{
    EpisodeConfig, EpisodeSection, MetricsSection, Mode, PlannerSection, RegionSpec, WorldFile,
};
pub use metrics::{compute_metrics, coverage_fraction, region_mae, Metrics, VisitedMask};
pub use report::{export_artifacts, EpisodeReport, ForgetRow, PlannerRow, TrajRow, TrainRow};
pub use run::{run_episode, run_baseline};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Mapper(#[from] crate::mapper::MapperError),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}
