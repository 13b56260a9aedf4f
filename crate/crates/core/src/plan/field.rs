use nalgebra::Vector3;

use crate::geom::{Point, SdfField};
use crate::sim::RobotModel;

use super::ocp::State;

/// Fixed-height planar slice of a 3D field, so the planar planner can
/// consume 3D maps.
pub struct PlanarSlice<'a, F: SdfField<3>> {
    pub field: &'a F,
    pub height: f64,
}

impl<F: SdfField<3>> SdfField<2> for PlanarSlice<'_, F> {
    fn value(&self, p: &Point<2>) -> f64 {
        self.field.value(&Point::<3>::new(p.x, p.y, self.height))
    }

    fn value_and_grad(&self, p: &Point<2>) -> (f64, Point<2>) {
        let (v, g) = self
            .field
            .value_and_grad(&Point::<3>::new(p.x, p.y, self.height));
        (v, Point::<2>::new(g.x, g.y))
    }
}

/// Collision linearization at one state: the body-point minimum distance and
/// its gradient with respect to the planner state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionLin {
    pub distance: f64,
    pub grad: Vector3<f64>,
}

/// Minimum fused distance over the robot's body samples at planner state
/// `x`, with the index of the argmin body point (lowest index on ties) and
/// the world position of that point. `base` carries any fixed coordinates
/// beyond the plane (e.g. the body height in 3D worlds).
pub fn body_collision_distance<const D: usize, F: SdfField<D>>(
    field: &F,
    body: &RobotModel<D>,
    base: &Point<D>,
    x: &State,
) -> (f64, usize, Point<D>) {
    let (sin, cos) = x.z.sin_cos();
    let mut best = (f64::INFINITY, 0usize, *base);
    for (k, b) in body.body_points.iter().enumerate() {
        let mut p = *base;
        p[0] = x.x + cos * b[0] - sin * b[1];
        p[1] = x.y + sin * b[0] + cos * b[1];
        for i in 2..D {
            p[i] = base[i] + b[i];
        }
        let d = field.value(&p);
        if d < best.0 {
            best = (d, k, p);
        }
    }
    best
}

/// Linearizes the body-point minimum distance at `x`: gradient flows through
/// the argmin body point by the chain rule over the rigid transform.
pub fn linearize_collision<const D: usize, F: SdfField<D>>(
    field: &F,
    body: &RobotModel<D>,
    base: &Point<D>,
    x: &State,
) -> CollisionLin {
    let (d, k, p) = body_collision_distance(field, body, base, x);
    let (_, g) = field.value_and_grad(&p);
    let b = &body.body_points[k];
    let (sin, cos) = x.z.sin_cos();
    // d(p)/d(theta) rotates the body offset by 90 degrees.
    let dpx_dth = -sin * b[0] - cos * b[1];
    let dpy_dth = cos * b[0] - sin * b[1];
    CollisionLin {
        distance: d,
        grad: Vector3::new(g[0], g[1], g[0] * dpx_dth + g[1] * dpy_dth),
    }
}
