use nalgebra::{Matrix3, Matrix3x2};

use super::ocp::{ControlVec, State};

/// Closed-form Jacobians of the explicit-Euler unicycle at `(x, u)`:
/// `A = df/dx`, `B = df/du`.
pub fn linearize_dynamics(x: &State, u: &ControlVec, dt: f64) -> (Matrix3<f64>, Matrix3x2<f64>) {
    let (sin, cos) = x.z.sin_cos();
    let a = Matrix3::new(
        1.0, 0.0, -u.x * sin * dt,
        0.0, 1.0, u.x * cos * dt,
        0.0, 0.0, 1.0,
    );
    let b = Matrix3x2::new(
        cos * dt, 0.0,
        sin * dt, 0.0,
        0.0, dt,
    );
    (a, b)
}
