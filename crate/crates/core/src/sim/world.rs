use serde::{Deserialize, Serialize};

use crate::geom::{Bbox, Point, Primitive, SdfField};

use super::SimError;

/// Ground-truth environment: analytic obstacle primitives within bounds.
///
/// The exact map SDF is the union (elementwise minimum) of the primitive
/// SDFs. In 3D mode an optional floor plane height marks which LiDAR hits
/// count as floor points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldSpec<const D: usize> {
    pub primitives: Vec<Primitive<D>>,
    pub bounds: Bbox<D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor_height: Option<f64>,
}

impl<const D: usize> WorldSpec<D> {
    pub fn new(primitives: Vec<Primitive<D>>, bounds: Bbox<D>) -> Result<Self, SimError> {
        let world = Self {
            primitives,
            bounds,
            floor_height: None,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.primitives.is_empty() {
            return Err(SimError::EmptyWorld);
        }
        for prim in &self.primitives {
            prim.validate()
                .map_err(|e| SimError::InvalidWorld(e.to_string()))?;
            let pb = prim.bbox();
            if !(self.bounds.contains(&pb.min) && self.bounds.contains(&pb.max)) {
                return Err(SimError::InvalidWorld(format!(
                    "primitive {pb:?} extends outside world bounds"
                )));
            }
        }
        Ok(())
    }

    /// Exact ground-truth signed distance, the union rule over primitives.
    pub fn sdf(&self, p: &Point<D>) -> f64 {
        self.primitives
            .iter()
            .map(|prim| prim.sdf(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Gradient of the union SDF, taken from the closest primitive
    /// (ties break toward the lowest index).
    pub fn sdf_grad(&self, p: &Point<D>) -> (f64, Point<D>) {
        let mut best = f64::INFINITY;
        let mut best_idx = 0;
        for (i, prim) in self.primitives.iter().enumerate() {
            let d = prim.sdf(p);
            if d < best {
                best = d;
                best_idx = i;
            }
        }
        (best, self.primitives[best_idx].sdf_grad(p))
    }
}

impl WorldSpec<2> {
    /// Evenly spaced points on the union boundary at roughly `spacing`
    /// meters apart. Points strictly inside another primitive are rejected,
    /// so the result samples the boundary of the union.
    pub fn sample_boundary(&self, spacing: f64) -> Vec<Point<2>> {
        let mut out = Vec::new();
        let mut push = |q: Point<2>, owner: usize, world: &Self| {
            let inside_other = world
                .primitives
                .iter()
                .enumerate()
                .any(|(i, o)| i != owner && o.sdf(&q) < -1e-9);
            if !inside_other {
                out.push(q);
            }
        };
        for (idx, prim) in self.primitives.iter().enumerate() {
            match prim {
                Primitive::Ball { center, radius } => {
                    let n = ((2.0 * std::f64::consts::PI * radius / spacing).ceil() as usize).max(8);
                    for k in 0..n {
                        let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        push(
                            Point::<2>::new(
                                center.x + radius * ang.cos(),
                                center.y + radius * ang.sin(),
                            ),
                            idx,
                            self,
                        );
                    }
                }
                Primitive::AxisBox { min, max } => {
                    let (w, h) = (max.x - min.x, max.y - min.y);
                    let per_side = |len: f64| ((len / spacing).ceil() as usize).max(2);
                    let (nx, ny) = (per_side(w), per_side(h));
                    for k in 0..nx {
                        let x = min.x + w * k as f64 / nx as f64;
                        push(Point::<2>::new(x, min.y), idx, self);
                        push(Point::<2>::new(min.x + w - w * k as f64 / nx as f64, max.y), idx, self);
                    }
                    for k in 0..ny {
                        let y = min.y + h * k as f64 / ny as f64;
                        push(Point::<2>::new(max.x, y), idx, self);
                        push(Point::<2>::new(min.x, min.y + h - h * k as f64 / ny as f64), idx, self);
                    }
                }
                Primitive::Capsule { a, b, radius } => {
                    let axis = b - a;
                    let len = axis.norm();
                    let t = axis / len;
                    let normal = Point::<2>::new(-t.y, t.x);
                    let n_side = ((len / spacing).ceil() as usize).max(2);
                    for k in 0..n_side {
                        let q = a + axis * (k as f64 / n_side as f64);
                        push(q + normal * *radius, idx, self);
                        push(q - normal * *radius, idx, self);
                    }
                    let base = normal.y.atan2(normal.x);
                    let n_arc = ((std::f64::consts::PI * radius / spacing).ceil() as usize).max(4);
                    for k in 0..=n_arc {
                        let ang = base + std::f64::consts::PI * k as f64 / n_arc as f64;
                        push(
                            Point::<2>::new(a.x + radius * ang.cos(), a.y + radius * ang.sin()),
                            idx,
                            self,
                        );
                        push(
                            Point::<2>::new(b.x - radius * ang.cos(), b.y - radius * ang.sin()),
                            idx,
                            self,
                        );
                    }
                }
            }
        }
        out
    }
}

/// `SdfField` view of the exact world geometry. Stands in for a learned map
/// in planner tests and metric oracles.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticSdf<'a, const D: usize>(pub &'a WorldSpec<D>);

impl<const D: usize> SdfField<D> for AnalyticSdf<'_, D> {
    fn value(&self, p: &Point<D>) -> f64 {
        self.0.sdf(p)
    }

    fn value_and_grad(&self, p: &Point<D>) -> (f64, Point<D>) {
        self.0.sdf_grad(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_circle_world() -> WorldSpec<2> {
        WorldSpec::new(
            vec![
                Primitive::Ball {
                    center: vector![2.0, 0.0],
                    radius: 1.0,
                },
                Primitive::Ball {
                    center: vector![-2.0, 1.0],
                    radius: 0.5,
                },
            ],
            Bbox::new(vector![-5.0, -5.0], vector![5.0, 5.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn free_space_positive_inside_negative() {
        let world = two_circle_world();
        let far = vector![0.0, -4.0];
        let d = world.sdf(&far);
        assert!(d > 0.0);
        // At least as close as the distance to the nearest primitive bound.
        assert!(d <= (far - vector![2.0, 0.0]).norm() - 1.0 + 1e-12);
        assert!(world.sdf(&vector![2.0, 0.0]) < 0.0);
    }

    #[test]
    fn matches_dense_boundary_oracle_outside_overlaps() {
        let world = two_circle_world();
        let boundary = world.sample_boundary(9e-5);
        assert!(boundary.len() >= 100_000);
        let index = crate::geom::NnIndex::build(boundary).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = vector![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let (nearest, _) = index.nearest(&p);
            let expected = if world.sdf(&p) < 0.0 { -nearest } else { nearest };
            assert!(
                (world.sdf(&p) - expected).abs() < 1e-3,
                "sdf {} vs oracle {expected}",
                world.sdf(&p)
            );
        }
    }

    #[test]
    fn world_must_contain_primitives_inside_bounds() {
        let bounds = Bbox::new(vector![-1.0, -1.0], vector![1.0, 1.0]).unwrap();
        assert!(matches!(
            WorldSpec::<2>::new(vec![], bounds),
            Err(SimError::EmptyWorld)
        ));
        let out_of_bounds = Primitive::Ball {
            center: vector![5.0, 0.0],
            radius: 1.0,
        };
        assert!(WorldSpec::new(vec![out_of_bounds], bounds).is_err());
    }

    #[test]
    fn analytic_gradient_is_radial_for_circle() {
        let world = WorldSpec::new(
            vec![Primitive::Ball {
                center: vector![0.0, 0.0],
                radius: 1.0,
            }],
            Bbox::new(vector![-3.0, -3.0], vector![3.0, 3.0]).unwrap(),
        )
        .unwrap();
        let (_, g) = world.sdf_grad(&vector![2.0, 0.0]);
        assert!((g - vector![1.0, 0.0]).norm() < 1e-12);
    }
}
