//! Online continual mapping: scan gating, ray augmentation and labeling,
//! bounded training sets, the local-map cache/warm-start/waiting lifecycle,
//! and confidence-fused global map queries.

mod bundle;
mod dataset;
mod global_map;
mod goal;
mod labels;
mod trainer;

pub use bundle::{load_bundle, save_bundle, BundleManifest};
pub use dataset::{export_dataset_csv, TrainingSet};
pub use global_map::{GlobalSdfMap, LocalMapRecord};
pub use goal::{select_goal, GoalConfig};
pub use labels::{accept_scan, augment_scan, confidence_label, LabeledSample, SampleKind};
pub use trainer::{ActiveTrainer, OnlineMapper};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::GeomError;
use crate::net::NetError;

/// Mapping hyperparameters. Desk-scale defaults; `paper_preset` restores the
/// full-scale buffer and batch sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapperConfig {
    /// Surface buffer capacity N_s.
    pub surface_capacity: usize,
    /// Augmented (free + interior) buffer capacity N_a.
    pub augmented_capacity: usize,
    pub batch_size: usize,
    /// Confidence decay base b of the interior labeling rule.
    pub confidence_base: f64,
    /// Depth d_max sampled past each hit, meters.
    pub interior_depth: f64,
    pub free_per_ray: usize,
    pub interior_per_ray: usize,
    /// Scan novelty gate: accept when the directed Hausdorff distance from
    /// the scan to the stored surface exceeds this, meters.
    pub tau_ingest: f64,
    /// Waiting-period release: resume training when some scan point sits
    /// farther than this from the previous map's zero level set, meters.
    pub tau_wait: f64,
    /// Caching threshold on the loss EMA times `cache_loss_scale`.
    pub tau_cache: f64,
    /// Normalizes the Huber term weight out of the cache threshold.
    pub cache_loss_scale: f64,
    /// Consecutive below-threshold steps required before caching.
    pub cache_patience: usize,
    pub max_steps_per_map: usize,
    pub ema_decay: f64,
    /// Inverse-distance sampling weight floor, meters.
    pub weight_epsilon: f64,
    /// Softmax fusion sharpness alpha.
    pub softmax_sharpness: f64,
    /// Hits within this height of the floor plane are discarded (3D mode).
    pub floor_margin: f64,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            surface_capacity: 20_000,
            augmented_capacity: 30_000,
            batch_size: 1_000,
            confidence_base: 4.0,
            interior_depth: 0.5,
            free_per_ray: 8,
            interior_per_ray: 4,
            tau_ingest: 0.1,
            tau_wait: 0.3,
            tau_cache: 0.05,
            cache_loss_scale: 1e-4,
            cache_patience: 50,
            max_steps_per_map: 3_000,
            ema_decay: 0.99,
            weight_epsilon: 0.05,
            softmax_sharpness: 1e2,
            floor_margin: 0.05,
        }
    }
}

impl MapperConfig {
    /// Full-scale preset: 200k surface points, 300k augmented, 10k batches.
    pub fn paper_preset() -> Self {
        Self {
            surface_capacity: 200_000,
            augmented_capacity: 300_000,
            batch_size: 10_000,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum MapperError {
    #[error("global map is empty: no cached or active local map")]
    EmptyMap,
    #[error("no grid candidate offers the required clearance; explored or trapped")]
    NoReachableGoal,
    #[error("training diverged; the trainer retains the last finite parameters")]
    Diverged,
    #[error("trainer is in its waiting period")]
    Waiting,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("bundle i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad bundle: {0}")]
    BadBundle(String),
}
