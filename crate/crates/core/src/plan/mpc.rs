use serde::{Deserialize, Serialize};

use crate::geom::{Point, SdfField};
use crate::sim::{Control, RobotModel};

use super::ocp::{rollout, ControlVec, OcpSpec, State, TrajectorySolution};
use super::scp::{scp_solve, ScpConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcConfig {
    pub scp: ScpConfig,
    /// Predicted-collision bound: with the solver unconverged and the
    /// solution's hinge cost above this, command zero velocity instead.
    pub fallback_collision_cost: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            scp: ScpConfig::default(),
            fallback_collision_cost: 0.5,
        }
    }
}

/// Time-shifted previous solution used to seed the next solve.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub controls: Vec<ControlVec>,
}

/// Result of one receding-horizon step.
#[derive(Clone, Debug)]
pub struct MpcOutcome {
    /// First control of the plan, clamped to the box (zero-velocity fallback
    /// when the solve failed with deep predicted penetration).
    pub command: Control,
    pub solution: TrajectorySolution,
    pub warm: WarmStart,
    pub used_fallback: bool,
}

/// Solves the receding-horizon problem from `spec.x0`, warm-started with the
/// previous solution shifted by one step (last control duplicated).
pub fn mpc_step<const D: usize, F: SdfField<D>>(
    spec: &OcpSpec,
    field: &F,
    body: &RobotModel<D>,
    base: &Point<D>,
    warm: Option<&WarmStart>,
    cfg: &MpcConfig,
) -> MpcOutcome {
    let guess = warm.map(|w| {
        let mut controls = w.controls.clone();
        if controls.len() == spec.horizon + 1 {
            controls.rotate_left(1);
            let last = *controls.last().unwrap();
            *controls.last_mut().unwrap() = last;
        } else {
            controls = vec![ControlVec::zeros(); spec.horizon + 1];
        }
        let states = rollout(&spec.x0, &controls, spec.dt);
        (states, controls)
    });

    let solution = scp_solve(spec, field, body, base, guess, &cfg.scp);
    let used_fallback =
        !solution.converged && solution.cost.collision > cfg.fallback_collision_cost;
    let u0 = if used_fallback {
        ControlVec::zeros()
    } else {
        solution.controls[0]
    };
    let command = Control::new(
        u0.x.clamp(spec.u_min.x, spec.u_max.x),
        u0.y.clamp(spec.u_min.y, spec.u_max.y),
    );
    let warm = WarmStart {
        controls: solution.controls.clone(),
    };
    MpcOutcome {
        command,
        solution,
        warm,
        used_fallback,
    }
}
