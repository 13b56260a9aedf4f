use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{Point, SdfField};
use crate::sim::{wrap_angle, RobotModel};

use super::field::body_collision_distance;

/// Planner state `(x, y, heading)`. Headings are kept continuous (unwrapped)
/// along a trajectory; only goal errors wrap.
pub type State = Vector3<f64>;
/// Planner control `(v, omega)`.
pub type ControlVec = Vector2<f64>;

/// Finite-horizon optimal control problem specification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OcpSpec {
    /// Horizon T: controls u_0..u_T drive states x_0..x_{T+1}.
    pub horizon: usize,
    pub x0: State,
    pub x_goal: State,
    /// Diagonal of the state penalty Q.
    pub q: Vector3<f64>,
    /// Diagonal of the control penalty R.
    pub r: Vector2<f64>,
    /// Weights of the four cost terms: goal, control energy, slew, collision.
    pub weights: [f64; 4],
    pub u_min: ControlVec,
    pub u_max: ControlVec,
    /// Trust-region penalties on state and control deviations.
    pub rho_x: f64,
    pub rho_u: f64,
    pub dt: f64,
}

impl OcpSpec {
    pub fn validate(&self) -> Result<(), super::PlanError> {
        if self.horizon < 1 {
            return Err(super::PlanError::Dimension("horizon must be >= 1".into()));
        }
        if self.q.iter().any(|&v| v <= 0.0) || self.r.iter().any(|&v| v <= 0.0) {
            return Err(super::PlanError::Dimension(
                "Q and R diagonals must be positive".into(),
            ));
        }
        if self.rho_x <= 0.0 || self.rho_u <= 0.0 || self.weights[3] < 0.0 {
            return Err(super::PlanError::Dimension(
                "trust penalties must be positive and w4 nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Wrapped state error against the goal.
    pub fn goal_error(&self, x: &State) -> Vector3<f64> {
        Vector3::new(
            x.x - self.x_goal.x,
            x.y - self.x_goal.y,
            wrap_angle(x.z - self.x_goal.z),
        )
    }
}

/// Explicit-Euler unicycle step in planner coordinates (heading unwrapped).
pub fn unicycle_step(x: &State, u: &ControlVec, dt: f64) -> State {
    State::new(
        x.x + u.x * x.z.cos() * dt,
        x.y + u.x * x.z.sin() * dt,
        x.z + u.y * dt,
    )
}

/// Rolls a control sequence through the nonlinear dynamics from `x0`.
pub fn rollout(x0: &State, controls: &[ControlVec], dt: f64) -> Vec<State> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*x0);
    for u in controls {
        let next = unicycle_step(states.last().unwrap(), u, dt);
        states.push(next);
    }
    states
}

/// Per-term cost values; `total` applies the weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub goal: f64,
    pub control: f64,
    pub slew: f64,
    pub collision: f64,
    pub total: f64,
    /// Minimum body-point fused distance along the trajectory.
    pub min_distance: f64,
}

/// Evaluates the four-term trajectory cost through `field`.
pub fn eval_cost<const D: usize, F: SdfField<D>>(
    states: &[State],
    controls: &[ControlVec],
    spec: &OcpSpec,
    field: &F,
    body: &RobotModel<D>,
    base: &Point<D>,
) -> CostBreakdown {
    let mut c1 = 0.0;
    for x in states {
        let e = spec.goal_error(x);
        c1 += spec.q.x * e.x * e.x + spec.q.y * e.y * e.y + spec.q.z * e.z * e.z;
    }
    let mut c2 = 0.0;
    for u in controls {
        c2 += spec.r.x * u.x * u.x + spec.r.y * u.y * u.y;
    }
    let mut c3 = 0.0;
    for w in controls.windows(2) {
        c3 += (w[1] - w[0]).norm_squared();
    }
    let mut c4 = 0.0;
    let mut min_d = f64::INFINITY;
    for x in states {
        let (d, _, _) = body_collision_distance(field, body, base, x);
        min_d = min_d.min(d);
        c4 += (-d).max(0.0);
    }
    let w = spec.weights;
    CostBreakdown {
        goal: c1,
        control: c2,
        slew: c3,
        collision: c4,
        total: w[0] * c1 + w[1] * c2 + w[2] * c3 + w[3] * c4,
        min_distance: min_d,
    }
}

/// Solved trajectory with cost breakdown and solver diagnostics.
#[derive(Clone, Debug)]
pub struct TrajectorySolution {
    pub states: Vec<State>,
    pub controls: Vec<ControlVec>,
    pub cost: CostBreakdown,
    pub scp_iterations: usize,
    pub converged: bool,
}

impl TrajectorySolution {
    /// Largest defect between stored states and a fresh nonlinear rollout.
    pub fn rollout_defect(&self, dt: f64) -> f64 {
        let rolled = rollout(&self.states[0], &self.controls, dt);
        self.states
            .iter()
            .zip(&rolled)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
