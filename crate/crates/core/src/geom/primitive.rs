use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::GeomError;

/// Spatial query point in meters. All coordinates are expected to be finite.
pub type Point<const D: usize> = SVector<f64, D>;

/// Analytic obstacle primitive with a closed-form signed distance function.
///
/// Negative inside, positive outside, zero on the boundary. `Ball` is a
/// circle in 2D and a sphere in 3D; `AxisBox` is an axis-aligned rectangle or
/// box; `Capsule` is a segment inflated by a radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive<const D: usize> {
    Ball { center: Point<D>, radius: f64 },
    AxisBox { min: Point<D>, max: Point<D> },
    Capsule { a: Point<D>, b: Point<D>, radius: f64 },
}

impl<const D: usize> Primitive<D> {
    /// Checks the shape invariants: positive radii, box min strictly below max.
    pub fn validate(&self) -> Result<(), GeomError> {
        match self {
            Primitive::Ball { radius, .. } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(GeomError::InvalidPrimitive(format!(
                        "ball radius must be positive, got {radius}"
                    )))
                }
            }
            Primitive::AxisBox { min, max } => {
                if min.iter().zip(max.iter()).all(|(lo, hi)| lo < hi) {
                    Ok(())
                } else {
                    Err(GeomError::InvalidPrimitive(
                        "box min must be strictly below max componentwise".into(),
                    ))
                }
            }
            Primitive::Capsule { a, b, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(GeomError::InvalidPrimitive(format!(
                        "capsule radius must be positive, got {radius}"
                    )));
                }
                if (a - b).norm_squared() == 0.0 {
                    return Err(GeomError::InvalidPrimitive(
                        "capsule endpoints must be distinct".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Exact signed distance from `p` to the primitive boundary.
    pub fn sdf(&self, p: &Point<D>) -> f64 {
        match self {
            Primitive::Ball { center, radius } => (p - center).norm() - radius,
            Primitive::AxisBox { min, max } => {
                let center = (min + max) * 0.5;
                let half = (max - min) * 0.5;
                let q = (p - center).abs() - half;
                let outside = q.map(|v| v.max(0.0)).norm();
                let inside = q.fold(f64::NEG_INFINITY, f64::max).min(0.0);
                outside + inside
            }
            Primitive::Capsule { a, b, radius } => {
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (p - (a + ab * t)).norm() - radius
            }
        }
    }

    /// Tight axis-aligned bounds of the primitive.
    pub fn bbox(&self) -> super::Bbox<D> {
        let (min, max) = match self {
            Primitive::Ball { center, radius } => {
                (center.map(|v| v - radius), center.map(|v| v + radius))
            }
            Primitive::AxisBox { min, max } => (*min, *max),
            Primitive::Capsule { a, b, radius } => {
                let mut lo = *a;
                let mut hi = *a;
                for i in 0..D {
                    lo[i] = lo[i].min(b[i]) - radius;
                    hi[i] = hi[i].max(b[i]) + radius;
                }
                (lo, hi)
            }
        };
        super::Bbox { min, max }
    }

    /// Gradient of the signed distance, defined almost everywhere.
    ///
    /// On the medial axis and at degenerate points (e.g. the ball center) a
    /// deterministic subgradient is returned: ties on box faces break toward
    /// the lowest axis, and an exactly-centered query returns zero.
    pub fn sdf_grad(&self, p: &Point<D>) -> Point<D> {
        match self {
            Primitive::Ball { center, .. } => normalize_or_zero(p - center),
            Primitive::AxisBox { min, max } => {
                let center = (min + max) * 0.5;
                let half = (max - min) * 0.5;
                let rel = p - center;
                let q = rel.abs() - half;
                let outside = q.map(|v| v.max(0.0));
                let outside_norm = outside.norm();
                if outside_norm > 0.0 {
                    let mut g = outside / outside_norm;
                    for i in 0..D {
                        g[i] *= signum_or_one(rel[i]);
                    }
                    g
                } else {
                    // Inside: distance decreases fastest across the nearest face.
                    let mut axis = 0;
                    for i in 1..D {
                        if q[i] > q[axis] {
                            axis = i;
                        }
                    }
                    let mut g = Point::<D>::zeros();
                    g[axis] = signum_or_one(rel[axis]);
                    g
                }
            }
            Primitive::Capsule { a, b, .. } => {
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                normalize_or_zero(p - (a + ab * t))
            }
        }
    }
}

fn normalize_or_zero<const D: usize>(v: Point<D>) -> Point<D> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Point::<D>::zeros()
    }
}

fn signum_or_one(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{vector, Vector2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(cx: f64, cy: f64, r: f64) -> Primitive<2> {
        Primitive::Ball {
            center: vector![cx, cy],
            radius: r,
        }
    }

    #[test]
    fn circle_axis_distances() {
        let c = circle(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(c.sdf(&vector![2.0, 0.0]), 1.0);
        assert_abs_diff_eq!(c.sdf(&vector![0.0, 0.0]), -1.0);
        assert_abs_diff_eq!(c.sdf(&vector![0.0, 1.0]), 0.0);
    }

    #[test]
    fn box_face_distance() {
        let b = Primitive::AxisBox {
            min: vector![-1.0, -1.0],
            max: vector![1.0, 1.0],
        };
        assert_abs_diff_eq!(b.sdf(&vector![3.0, 0.0]), 2.0);
        // Corner region uses the Euclidean corner distance.
        assert_abs_diff_eq!(b.sdf(&vector![2.0, 2.0]), std::f64::consts::SQRT_2);
        // Inside: negative distance to the nearest face.
        assert_abs_diff_eq!(b.sdf(&vector![0.5, 0.0]), -0.5);
    }

    #[test]
    fn capsule_matches_segment_distance() {
        let cap = Primitive::Capsule {
            a: vector![0.0, 0.0],
            b: vector![2.0, 0.0],
            radius: 0.5,
        };
        assert_abs_diff_eq!(cap.sdf(&vector![1.0, 2.0]), 1.5);
        assert_abs_diff_eq!(cap.sdf(&vector![-1.0, 0.0]), 0.5);
        assert_abs_diff_eq!(cap.sdf(&vector![1.0, 0.0]), -0.5);
    }

    #[test]
    fn sphere_in_3d() {
        let s: Primitive<3> = Primitive::Ball {
            center: vector![0.0, 0.0, 1.0],
            radius: 2.0,
        };
        assert_abs_diff_eq!(s.sdf(&vector![0.0, 0.0, 4.0]), 1.0);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        assert!(circle(0.0, 0.0, 0.0).validate().is_err());
        let b: Primitive<2> = Primitive::AxisBox {
            min: vector![1.0, 0.0],
            max: vector![0.0, 1.0],
        };
        assert!(b.validate().is_err());
    }

    fn random_primitive(rng: &mut ChaCha8Rng) -> Primitive<2> {
        match rng.gen_range(0..3) {
            0 => Primitive::Ball {
                center: vector![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                radius: rng.gen_range(0.1..2.0),
            },
            1 => {
                let cx: f64 = rng.gen_range(-2.0..2.0);
                let cy: f64 = rng.gen_range(-2.0..2.0);
                let hx: f64 = rng.gen_range(0.1..1.5);
                let hy: f64 = rng.gen_range(0.1..1.5);
                Primitive::AxisBox {
                    min: vector![cx - hx, cy - hy],
                    max: vector![cx + hx, cy + hy],
                }
            }
            _ => Primitive::Capsule {
                a: vector![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                b: vector![rng.gen_range(-2.0..2.0) + 0.1, rng.gen_range(-2.0..2.0)],
                radius: rng.gen_range(0.1..1.0),
            },
        }
    }

    #[test]
    fn primitives_are_one_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let prim = random_primitive(&mut rng);
            let p: Vector2<f64> = vector![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let q: Vector2<f64> = vector![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let lhs = (prim.sdf(&p) - prim.sdf(&q)).abs();
            assert!(lhs <= (p - q).norm() + 1e-12);
        }
    }

    #[test]
    fn gradient_has_unit_norm_away_from_medial_axis() {
        // Central finite differences at h=1e-5 should report a unit-norm
        // gradient wherever the SDF is smooth.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 200 {
            let prim = random_primitive(&mut rng);
            let p: Vector2<f64> = vector![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            // Skip queries too close to the surface or to obvious kinks where
            // the one-sided distance flips.
            if prim.sdf(&p).abs() < 0.05 {
                continue;
            }
            let gx = (prim.sdf(&vector![p.x + h, p.y]) - prim.sdf(&vector![p.x - h, p.y])) / (2.0 * h);
            let gy = (prim.sdf(&vector![p.x, p.y + h]) - prim.sdf(&vector![p.x, p.y - h])) / (2.0 * h);
            let norm = (gx * gx + gy * gy).sqrt();
            // Points on the medial axis see a kink; the finite difference then
            // underestimates the slope. Only enforce where the FD is clean.
            let analytic = prim.sdf_grad(&p);
            if (analytic[0] - gx).abs() < 1e-3 && (analytic[1] - gy).abs() < 1e-3 {
                assert!((norm - 1.0).abs() < 1e-3, "norm {norm} at {p:?} for {prim:?}");
                checked += 1;
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 200 {
            let prim = random_primitive(&mut rng);
            let p: Vector2<f64> = vector![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            if prim.sdf(&p).abs() < 0.05 {
                continue;
            }
            let g = prim.sdf_grad(&p);
            let gx = (prim.sdf(&vector![p.x + h, p.y]) - prim.sdf(&vector![p.x - h, p.y])) / (2.0 * h);
            let gy = (prim.sdf(&vector![p.x, p.y + h]) - prim.sdf(&vector![p.x, p.y - h])) / (2.0 * h);
            // Exclude medial-axis straddles where FD is not the gradient.
            if (g[0] - gx).abs() < 1e-4 && (g[1] - gy).abs() < 1e-4 {
                checked += 1;
            } else {
                let mid = prim.sdf(&p);
                let left = prim.sdf(&vector![p.x - h, p.y]);
                let right = prim.sdf(&vector![p.x + h, p.y]);
                // FD disagreement must come from a kink, not a wrong gradient:
                // the second difference blows up there.
                assert!(
                    ((left + right - 2.0 * mid) / (h * h)).abs() > 1.0,
                    "gradient mismatch away from kink: {g:?} vs ({gx}, {gy}) for {prim:?} at {p:?}"
                );
            }
        }
    }
}
