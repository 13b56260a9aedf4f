//! Ground-truth world, LiDAR simulation, robot kinematics, and collision
//! evaluation.

mod lidar;
mod robot;
mod world;

pub use lidar::{lidar_scan, LidarConfig, LidarScan};
pub use robot::{
    check_collision, robot_body_points, step_dynamics, wrap_angle, Collision, Control, RobotModel,
    RobotPose,
};
pub use world::{AnalyticSdf, WorldSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("control ({0}, {1}) violates the model's control bounds")]
    ControlOutOfBounds(f64, f64),
    #[error("world must contain at least one primitive")]
    EmptyWorld,
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}
