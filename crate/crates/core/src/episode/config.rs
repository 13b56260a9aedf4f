//! World/experiment file: one TOML document holding the world geometry,
//! robot and LiDAR models, mapper, network, optimizer, planner, episode,
//! metric, and region blocks. See `worlds/` for the shipped examples.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{Bbox, Point, Primitive};
use crate::mapper::{GoalConfig, MapperConfig};
use crate::net::{LossWeights, NetConfig, OptimizerConfig};
use crate::sim::{Control, LidarConfig, RobotModel, RobotPose, WorldSpec};

use super::EpisodeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ours,
    FineTune,
    Batched,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ours" => Ok(Mode::Ours),
            "fine_tune" => Ok(Mode::FineTune),
            "batched" => Ok(Mode::Batched),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Ours => "ours",
            Mode::FineTune => "fine_tune",
            Mode::Batched => "batched",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldSection {
    pub bounds_min: [f64; 2],
    pub bounds_max: [f64; 2],
    pub primitives: Vec<Primitive<2>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotSection {
    /// Start pose `(x, y, heading)`.
    pub start: [f64; 3],
    pub body_radius: f64,
    pub body_samples: usize,
    pub u_min: [f64; 2],
    pub u_max: [f64; 2],
    pub dt: f64,
}

impl Default for RobotSection {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0, 0.0],
            body_radius: 0.3,
            body_samples: 8,
            u_min: [-0.5, -1.5],
            u_max: [1.0, 1.5],
            dt: 0.25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarSection {
    pub rays: usize,
    pub max_range: f64,
    pub noise_sigma: f64,
    pub scan_hz: f64,
}

impl Default for LidarSection {
    fn default() -> Self {
        Self {
            rays: 360,
            max_range: 8.0,
            noise_sigma: 0.0,
            scan_hz: 2.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerSection {
    pub horizon: usize,
    pub q: [f64; 3],
    pub r: [f64; 2],
    pub weights: [f64; 4],
    pub rho_x: f64,
    pub rho_u: f64,
    /// Seconds between MPC replans (independent of dt).
    pub replan_period: f64,
    pub goal: GoalConfig,
    /// Distance at which a goal counts as reached, meters.
    pub goal_reached_radius: f64,
    /// Re-select the exploration goal every this many scans.
    pub goal_refresh_scans: usize,
    pub fallback_collision_cost: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            horizon: 20,
            q: [1.0, 1.0, 0.1],
            r: [0.1, 0.05],
            weights: [1.0, 1.0, 0.1, 1e3],
            rho_x: 1.0,
            rho_u: 1.0,
            replan_period: 1.0,
            goal: GoalConfig::default(),
            goal_reached_radius: 0.4,
            goal_refresh_scans: 10,
            fallback_collision_cost: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeSection {
    /// Episode length in scan periods.
    pub scans: usize,
    pub train_steps_per_scan: usize,
    /// Total training-step budget of the batched baseline.
    pub batched_budget_steps: usize,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self {
            scans: 300,
            train_steps_per_scan: 25,
            batched_budget_steps: 3_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    /// Evaluation grid cell size, meters.
    pub grid_cell: f64,
    /// Confidence threshold of the confident band.
    pub confidence_band: f64,
    /// Ground-truth |SDF| band for MAE cells, meters.
    pub sdf_band: f64,
    pub levelset_resolution: usize,
    /// Ground-truth boundary sampling spacing for chamfer, meters.
    pub chamfer_spacing: f64,
    /// Cell size of the reachable-coverage grid, meters.
    pub coverage_cell: f64,
    /// Record the region-MAE forgetting curve every this many scans.
    pub forgetting_every_scans: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            grid_cell: 0.1,
            confidence_band: 0.8,
            sdf_band: 1.0,
            levelset_resolution: 192,
            chamfer_spacing: 0.02,
            coverage_cell: 0.25,
            forgetting_every_scans: 5,
        }
    }
}

/// Named axis-aligned evaluation region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

/// The parsed experiment file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldFile {
    pub world: WorldSection,
    #[serde(default)]
    pub robot: RobotSection,
    #[serde(default)]
    pub lidar: LidarSection,
    #[serde(default)]
    pub mapper: MapperConfig,
    #[serde(default)]
    pub network: NetConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub loss: LossWeights,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub episode: EpisodeSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub regions: BTreeMap<String, RegionSpec>,
}

impl WorldFile {
    pub fn parse(text: &str) -> Result<Self, EpisodeError> {
        let file: WorldFile =
            toml::from_str(text).map_err(|e| EpisodeError::Config(e.to_string()))?;
        file.build_world()?; // validates geometry
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, EpisodeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EpisodeError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn build_world(&self) -> Result<WorldSpec<2>, EpisodeError> {
        let bounds = Bbox::new(
            Point::<2>::new(self.world.bounds_min[0], self.world.bounds_min[1]),
            Point::<2>::new(self.world.bounds_max[0], self.world.bounds_max[1]),
        )?;
        Ok(WorldSpec::new(self.world.primitives.clone(), bounds)?)
    }

    pub fn build_robot(&self) -> RobotModel<2> {
        RobotModel::disc(
            self.robot.body_radius,
            self.robot.body_samples,
            Control::new(self.robot.u_min[0], self.robot.u_min[1]),
            Control::new(self.robot.u_max[0], self.robot.u_max[1]),
            self.robot.dt,
        )
    }

    pub fn start_pose(&self) -> RobotPose<2> {
        RobotPose::new(
            Point::<2>::new(self.robot.start[0], self.robot.start[1]),
            self.robot.start[2],
        )
    }

    pub fn build_lidar(&self) -> LidarConfig {
        LidarConfig {
            rays: self.lidar.rays,
            max_range: self.lidar.max_range,
            noise_sigma: self.lidar.noise_sigma,
            rings: Vec::new(),
        }
    }

    pub fn region_bboxes(&self) -> Result<BTreeMap<String, Bbox<2>>, EpisodeError> {
        let mut out = BTreeMap::new();
        for (name, r) in &self.regions {
            out.insert(
                name.clone(),
                Bbox::new(
                    Point::<2>::new(r.min[0], r.min[1]),
                    Point::<2>::new(r.max[0], r.max[1]),
                )?,
            );
        }
        Ok(out)
    }
}

/// A fully resolved run request: the parsed file plus run-level overrides.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub file: WorldFile,
    pub seed: u64,
    pub mode: Mode,
}

impl EpisodeConfig {
    pub fn new(file: WorldFile, seed: u64, mode: Mode) -> Self {
        Self { file, seed, mode }
    }

    /// Canonical serialization used for the manifest's config hash.
    pub fn canonical_string(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[world]
bounds_min = [-1.0, -1.0]
bounds_max = [9.0, 7.0]

[[world.primitives]]
kind = "ball"
center = [3.0, 2.0]
radius = 0.5

[[world.primitives]]
kind = "axis_box"
min = [5.0, 1.0]
max = [6.0, 3.0]

[robot]
start = [1.0, 1.0, 0.0]

[lidar]
max_range = 3.0
"#;

    #[test]
    fn minimal_file_parses_with_defaults() {
        let file = WorldFile::parse(MINIMAL).unwrap();
        assert_eq!(file.world.primitives.len(), 2);
        assert_eq!(file.episode.scans, 300);
        assert_eq!(file.mapper.batch_size, 1_000);
        assert_eq!(file.lidar.max_range, 3.0);
        let world = file.build_world().unwrap();
        assert!(world.sdf(&Point::<2>::new(3.0, 2.0)) < 0.0);
    }

    #[test]
    fn bad_geometry_is_rejected() {
        let text = MINIMAL.replace("radius = 0.5", "radius = -1.0");
        assert!(WorldFile::parse(&text).is_err());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let file = WorldFile::parse(MINIMAL).unwrap();
        let a = EpisodeConfig::new(file.clone(), 1, Mode::Ours);
        let b = EpisodeConfig::new(file, 1, Mode::Ours);
        assert_eq!(a.config_hash(), b.config_hash());
        let mut other = a.clone();
        other.seed = 2;
        assert_ne!(a.config_hash(), other.config_hash());
    }

    #[test]
    fn regions_parse_into_bboxes() {
        let text = format!("{MINIMAL}\n[regions.a]\nmin = [0.0, 0.0]\nmax = [4.0, 6.0]\n");
        let file = WorldFile::parse(&text).unwrap();
        let regions = file.region_bboxes().unwrap();
        assert!(regions.contains_key("a"));
    }
}
