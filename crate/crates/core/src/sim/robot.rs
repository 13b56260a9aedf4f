use serde::{Deserialize, Serialize};

use crate::geom::Point;

use super::{SimError, WorldSpec};

/// Differential-drive command: forward speed (m/s) and yaw rate (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
}

impl Control {
    pub const ZERO: Control = Control { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn clamp(&self, lo: &Control, hi: &Control) -> Control {
        Control {
            v: self.v.clamp(lo.v, hi.v),
            omega: self.omega.clamp(lo.omega, hi.omega),
        }
    }
}

/// Planar robot pose. In 3D worlds the robot is held planar: the position
/// carries a fixed height and `heading` is the yaw about the vertical axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotPose<const D: usize> {
    pub position: Point<D>,
    /// Yaw, normalized to (-pi, pi].
    pub heading: f64,
}

impl<const D: usize> RobotPose<D> {
    pub fn new(position: Point<D>, heading: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

/// Rigid body model plus control limits and integration step.
///
/// `body_points` are expressed in the body frame; each carries a cover
/// margin such that the union of balls around the transformed samples
/// contains the body. For the default disc model the center sample has
/// margin equal to the body radius, making the ground-truth collision check
/// exact, while the boundary ring serves the planner's body-point minimum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobotModel<const D: usize> {
    pub body_radius: f64,
    pub body_points: Vec<Point<D>>,
    pub body_margins: Vec<f64>,
    pub u_min: Control,
    pub u_max: Control,
    pub dt: f64,
}

impl<const D: usize> RobotModel<D> {
    /// Disc body of `body_radius` with `k_boundary` evenly spaced boundary
    /// samples plus the center.
    pub fn disc(body_radius: f64, k_boundary: usize, u_min: Control, u_max: Control, dt: f64) -> Self {
        let mut body_points = vec![Point::<D>::zeros()];
        let mut body_margins = vec![body_radius];
        for k in 0..k_boundary {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / k_boundary as f64;
            let mut p = Point::<D>::zeros();
            p[0] = body_radius * ang.cos();
            p[1] = body_radius * ang.sin();
            body_points.push(p);
            body_margins.push(0.0);
        }
        Self {
            body_radius,
            body_points,
            body_margins,
            u_min,
            u_max,
            dt,
        }
    }

    fn control_in_bounds(&self, u: &Control) -> bool {
        let tol = 1e-9;
        u.v >= self.u_min.v - tol
            && u.v <= self.u_max.v + tol
            && u.omega >= self.u_min.omega - tol
            && u.omega <= self.u_max.omega + tol
    }
}

fn rotate_planar<const D: usize>(p: &Point<D>, cos: f64, sin: f64) -> Point<D> {
    let mut q = *p;
    q[0] = cos * p[0] - sin * p[1];
    q[1] = sin * p[0] + cos * p[1];
    q
}

/// World-frame positions of the model's body samples at `pose`.
pub fn robot_body_points<const D: usize>(
    pose: &RobotPose<D>,
    model: &RobotModel<D>,
) -> Vec<Point<D>> {
    let (sin, cos) = pose.heading.sin_cos();
    model
        .body_points
        .iter()
        .map(|p| pose.position + rotate_planar(p, cos, sin))
        .collect()
}

/// One explicit-Euler step of the unicycle kinematics.
///
/// Controls outside the model's box are an error; the planner is responsible
/// for clamping before actuation.
pub fn step_dynamics<const D: usize>(
    pose: &RobotPose<D>,
    u: &Control,
    model: &RobotModel<D>,
) -> Result<RobotPose<D>, SimError> {
    if !model.control_in_bounds(u) {
        return Err(SimError::ControlOutOfBounds(u.v, u.omega));
    }
    let (sin, cos) = pose.heading.sin_cos();
    let mut position = pose.position;
    position[0] += u.v * cos * model.dt;
    position[1] += u.v * sin * model.dt;
    Ok(RobotPose {
        position,
        heading: wrap_angle(pose.heading + u.omega * model.dt),
    })
}

/// Ground-truth collision verdict with penetration depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collision {
    pub colliding: bool,
    /// Maximum violation of the per-sample margins, in meters (0 when free).
    pub depth: f64,
}

/// Ground-truth collision check: the robot collides when the world SDF at
/// any body sample drops below that sample's cover margin.
pub fn check_collision<const D: usize>(
    world: &WorldSpec<D>,
    pose: &RobotPose<D>,
    model: &RobotModel<D>,
) -> Collision {
    let mut depth = 0.0f64;
    for (p, margin) in robot_body_points(pose, model)
        .iter()
        .zip(&model.body_margins)
    {
        depth = depth.max(margin - world.sdf(p));
    }
    Collision {
        colliding: depth > 0.0,
        depth,
    }
}
