use serde::{Deserialize, Serialize};

use crate::geom::{Point, SdfField};
use crate::sim::RobotModel;

use super::admm::solve_qp;
use super::field::linearize_collision;
use super::linearize::linearize_dynamics;
use super::ocp::{eval_cost, rollout, ControlVec, OcpSpec, State, TrajectorySolution};
use super::qp::assemble_qp;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScpConfig {
    pub max_iterations: usize,
    /// Convergence threshold on `‖Δx‖ + ‖Δu‖` of the accepted step.
    pub epsilon: f64,
    pub qp_tolerance: f64,
    pub qp_max_iterations: usize,
    /// Trust-penalty growth factor on a rejected step.
    pub trust_expand: f64,
    /// Trust-penalty decay factor after an accepted step.
    pub trust_decay: f64,
    /// Smallest trust penalty the decay can reach.
    pub trust_floor: f64,
    /// Rejected-step retries per SCP iteration.
    pub max_retries: usize,
    /// Hinge cost above which a converged iterate triggers a polish pass
    /// with a tighter QP tolerance.
    pub collision_polish_threshold: f64,
}

impl Default for ScpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            epsilon: 1e-3,
            qp_tolerance: 1e-4,
            qp_max_iterations: 4000,
            trust_expand: 2.0,
            trust_decay: 0.5,
            trust_floor: 1e-3,
            max_retries: 5,
            collision_polish_threshold: 1e-6,
        }
    }
}

/// Sequential convex programming over the linearized problem.
///
/// Each iteration linearizes the dynamics and the collision field along the
/// incumbent, solves the convex QP, clamps the shifted controls to the box,
/// and re-rolls the states through the true nonlinear dynamics, which keeps
/// every iterate exactly dynamically feasible. Steps that increase the true
/// cost are rejected with doubled trust penalties; accepted steps decay the
/// penalties back toward the spec values. Terminates when the accepted step
/// norm drops under `epsilon`.
pub fn scp_solve<const D: usize, F: SdfField<D>>(
    spec: &OcpSpec,
    field: &F,
    body: &RobotModel<D>,
    base: &Point<D>,
    initial_guess: Option<(Vec<State>, Vec<ControlVec>)>,
    cfg: &ScpConfig,
) -> TrajectorySolution {
    let t_h = spec.horizon;
    let (mut states, mut controls) = match initial_guess {
        Some((s, u)) if s.len() == t_h + 2 && u.len() == t_h + 1 => (s, u),
        _ => {
            let controls = vec![ControlVec::zeros(); t_h + 1];
            (rollout(&spec.x0, &controls, spec.dt), controls)
        }
    };
    let mut best = eval_cost(&states, &controls, spec, field, body, base);
    let mut rho_x = spec.rho_x;
    let mut rho_u = spec.rho_u;
    let mut converged = false;
    let mut iterations = 0;
    let mut qp_tol = cfg.qp_tolerance;

    let use_collision = spec.weights[3] > 0.0;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let dynamics: Vec<_> = (0..=t_h)
            .map(|t| linearize_dynamics(&states[t], &controls[t], spec.dt))
            .collect();
        let collisions: Option<Vec<_>> = use_collision.then(|| {
            (1..=t_h + 1)
                .map(|t| linearize_collision(field, body, base, &states[t]))
                .collect()
        });

        let mut accepted = false;
        for _ in 0..=cfg.max_retries {
            let assembled = assemble_qp(
                spec,
                &states,
                &controls,
                &dynamics,
                collisions.as_deref(),
                rho_x,
                rho_u,
            );
            let (qp, layout) = match assembled {
                Ok(v) => v,
                Err(_) => break,
            };
            let sol = match solve_qp(&qp, qp_tol, cfg.qp_max_iterations) {
                Ok(s) => s,
                Err(_) => break,
            };
            let (_, du, _) = layout.split(&sol.x);
            let candidate_controls: Vec<ControlVec> = controls
                .iter()
                .zip(&du)
                .map(|(u, d)| {
                    let shifted = u + d;
                    ControlVec::new(
                        shifted.x.clamp(spec.u_min.x, spec.u_max.x),
                        shifted.y.clamp(spec.u_min.y, spec.u_max.y),
                    )
                })
                .collect();
            let candidate_states = rollout(&spec.x0, &candidate_controls, spec.dt);
            let cost = eval_cost(&candidate_states, &candidate_controls, spec, field, body, base);
            if cost.total <= best.total + 1e-12 {
                let step_norm = {
                    let mut sx = 0.0;
                    for (a, b) in candidate_states.iter().zip(&states) {
                        sx += (a - b).norm_squared();
                    }
                    let mut su = 0.0;
                    for (a, b) in candidate_controls.iter().zip(&controls) {
                        su += (a - b).norm_squared();
                    }
                    sx.sqrt() + su.sqrt()
                };
                states = candidate_states;
                controls = candidate_controls;
                best = cost;
                rho_x = (rho_x * cfg.trust_decay).max(cfg.trust_floor);
                rho_u = (rho_u * cfg.trust_decay).max(cfg.trust_floor);
                accepted = true;
                if step_norm < cfg.epsilon {
                    converged = true;
                }
                break;
            }
            rho_x *= cfg.trust_expand;
            rho_u *= cfg.trust_expand;
        }
        // A converged iterate that still pays hinge cost usually reflects
        // slack resolved only to the QP tolerance; polish with a tighter
        // solve instead of stopping.
        if (converged || !accepted)
            && use_collision
            && best.collision > cfg.collision_polish_threshold
            && qp_tol > 1e-9
        {
            qp_tol *= 1e-2;
            converged = false;
            continue;
        }
        if !accepted {
            // Trust region collapsed without a descent step: the incumbent
            // is as good as this linearization gets.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    TrajectorySolution {
        states,
        controls,
        cost: best,
        scp_iterations: iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Bbox, Primitive};
    use crate::sim::{check_collision, AnalyticSdf, Control, RobotPose, WorldSpec};
    use nalgebra::{vector, Vector2, Vector3};

    fn default_spec(x0: State, goal: State) -> OcpSpec {
        OcpSpec {
            horizon: 20,
            x0,
            x_goal: goal,
            q: Vector3::new(1.0, 1.0, 0.1),
            r: Vector2::new(0.1, 0.05),
            weights: [1.0, 1.0, 0.1, 1e3],
            u_min: Vector2::new(-0.5, -1.5),
            u_max: Vector2::new(1.0, 1.5),
            rho_x: 1.0,
            rho_u: 1.0,
            dt: 0.25,
        }
    }

    fn body() -> RobotModel<2> {
        RobotModel::disc(0.3, 8, Control::new(-0.5, -1.5), Control::new(1.0, 1.5), 0.25)
    }

    fn empty_ahead_world() -> WorldSpec<2> {
        WorldSpec::new(
            vec![Primitive::Ball {
                center: vector![0.0, 40.0],
                radius: 1.0,
            }],
            Bbox::new(vector![-50.0, -50.0], vector![50.0, 50.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn start_at_goal_converges_immediately() {
        let world = empty_ahead_world();
        let field = AnalyticSdf(&world);
        let spec = default_spec(State::zeros(), State::zeros());
        let sol = scp_solve(&spec, &field, &body(), &vector![0.0, 0.0], None, &ScpConfig::default());
        assert!(sol.converged);
        assert!(sol.scp_iterations <= 2);
        for u in &sol.controls {
            assert!(u.norm() < 1e-3);
        }
    }

    #[test]
    fn free_space_goal_reaching() {
        let world = empty_ahead_world();
        let field = AnalyticSdf(&world);
        let spec = default_spec(State::zeros(), State::new(2.0, 0.0, 0.0));
        let sol = scp_solve(&spec, &field, &body(), &vector![0.0, 0.0], None, &ScpConfig::default());
        assert!(sol.converged, "no convergence in {} iters", sol.scp_iterations);
        assert!(sol.scp_iterations <= 10);
        assert_eq!(sol.cost.collision, 0.0);
        let terminal = sol.states.last().unwrap();
        let e = spec.goal_error(terminal);
        assert!(e.xy().norm() < 0.3, "terminal error {e:?}");
        // Rollout consistency is exact by construction.
        assert!(sol.rollout_defect(spec.dt) < 1e-9);
        // Controls respect the box exactly.
        for u in &sol.controls {
            assert!(u.x >= spec.u_min.x && u.x <= spec.u_max.x);
            assert!(u.y >= spec.u_min.y && u.y <= spec.u_max.y);
        }
    }

    #[test]
    fn dodges_a_wall_between_start_and_goal() {
        let world = WorldSpec::new(
            vec![Primitive::AxisBox {
                min: vector![1.2, -1.2],
                max: vector![1.8, 1.2],
            }],
            Bbox::new(vector![-10.0, -10.0], vector![10.0, 10.0]).unwrap(),
        )
        .unwrap();
        let field = AnalyticSdf(&world);
        let mut spec = default_spec(State::zeros(), State::new(3.2, 0.0, 0.0));
        spec.horizon = 28;
        let sol = scp_solve(&spec, &field, &body(), &vector![0.0, 0.0], None, &ScpConfig::default());
        assert!(sol.cost.collision <= 1e-6, "c4 = {}", sol.cost.collision);
        // Ground-truth collision check along the trajectory.
        let model = body();
        for x in &sol.states {
            let pose = RobotPose::new(vector![x.x, x.y], x.z);
            let verdict = check_collision(&world, &pose, &model);
            assert!(!verdict.colliding, "collision at {x:?}");
        }
    }

    #[test]
    fn true_cost_never_increases_across_iterations() {
        // Instrument by running the solver twice with increasing iteration
        // caps; the accepted-cost sequence must be monotone.
        let world = empty_ahead_world();
        let field = AnalyticSdf(&world);
        let spec = default_spec(State::zeros(), State::new(1.5, 1.0, 0.0));
        let mut last = f64::INFINITY;
        for iters in 1..=12 {
            let cfg = ScpConfig {
                max_iterations: iters,
                ..ScpConfig::default()
            };
            let sol = scp_solve(&spec, &field, &body(), &vector![0.0, 0.0], None, &cfg);
            assert!(sol.cost.total <= last + 1e-9, "cost rose at cap {iters}");
            last = sol.cost.total;
        }
    }

    #[test]
    fn enclosed_start_minimizes_penetration() {
        // Start strictly inside an obstacle: exact feasibility is impossible
        // but the penalty drives the trajectory outward.
        let world = WorldSpec::new(
            vec![Primitive::Ball {
                center: vector![0.0, 0.0],
                radius: 1.0,
            }],
            Bbox::new(vector![-10.0, -10.0], vector![10.0, 10.0]).unwrap(),
        )
        .unwrap();
        let field = AnalyticSdf(&world);
        let mut spec = default_spec(State::new(0.6, 0.0, 0.0), State::new(3.0, 0.0, 0.0));
        spec.horizon = 16;
        let sol = scp_solve(&spec, &field, &body(), &vector![0.0, 0.0], None, &ScpConfig::default());
        assert!(sol.cost.collision > 0.0);
        // The zero-control baseline stays fully inside; the solution must be
        // strictly better.
        let zero_controls = vec![ControlVec::zeros(); spec.horizon + 1];
        let zero_states = rollout(&spec.x0, &zero_controls, spec.dt);
        let zero = eval_cost(&zero_states, &zero_controls, &spec, &field, &body(), &vector![0.0, 0.0]);
        assert!(sol.cost.total < zero.total);
        // Later states escape the obstacle.
        let last = sol.states.last().unwrap();
        assert!(world.sdf(&vector![last.x, last.y]) > 0.0);
    }
}
