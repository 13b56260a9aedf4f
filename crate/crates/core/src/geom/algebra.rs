use super::GeomError;

/// SDF of the union of the underlying sets: the elementwise minimum.
///
/// Inside overlap regions the minimum is a lower bound rather than the exact
/// union SDF; that is the standard set-algebra rule and is what every caller
/// here relies on.
pub fn sdf_union(values: &[f64]) -> Result<f64, GeomError> {
    values
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .ok_or(GeomError::EmptyInput)
}

/// SDF of the intersection of the underlying sets: the elementwise maximum.
pub fn sdf_intersection(values: &[f64]) -> Result<f64, GeomError> {
    values
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(GeomError::EmptyInput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point, Primitive};
    use nalgebra::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn union_is_minimum() {
        assert_eq!(sdf_union(&[1.0, -0.5, 2.0]).unwrap(), -0.5);
        assert_eq!(sdf_union(&[3.25]).unwrap(), 3.25);
        assert!(sdf_union(&[]).is_err());
    }

    #[test]
    fn intersection_is_maximum() {
        assert_eq!(sdf_intersection(&[1.0, -0.5]).unwrap(), 1.0);
        assert_eq!(sdf_intersection(&[-2.0]).unwrap(), -2.0);
        assert!(sdf_intersection(&[]).is_err());
    }

    /// Distance to the nearest of many boundary samples, signed by membership.
    /// An implementation-independent oracle for composite shapes.
    fn boundary_sampling_sdf(prims: &[Primitive<2>], p: &Point<2>, samples: usize) -> f64 {
        let mut best = f64::INFINITY;
        for prim in prims {
            if let Primitive::Ball { center, radius } = prim {
                for k in 0..samples {
                    let ang = 2.0 * std::f64::consts::PI * (k as f64) / (samples as f64);
                    let q = vector![center.x + radius * ang.cos(), center.y + radius * ang.sin()];
                    // Only points on the boundary of the *union* count.
                    let inside_other = prims
                        .iter()
                        .any(|o| o != prim && o.sdf(&q) < -1e-12);
                    if !inside_other {
                        best = best.min((p - q).norm());
                    }
                }
            }
        }
        let inside = prims.iter().any(|prim| prim.sdf(p) < 0.0);
        if inside {
            -best
        } else {
            best
        }
    }

    #[test]
    fn overlapping_circles_match_boundary_oracle() {
        let prims = vec![
            Primitive::Ball {
                center: vector![0.0, 0.0],
                radius: 1.0,
            },
            Primitive::Ball {
                center: vector![1.0, 0.0],
                radius: 1.0,
            },
        ];
        let p = vector![0.5, 0.0];
        let values: Vec<f64> = prims.iter().map(|pr| pr.sdf(&p)).collect();
        let fused = sdf_union(&values).unwrap();
        assert!((fused - (-0.5)).abs() < 1e-12);
        // Inside the overlap the min rule is only a bound: the true union
        // boundary nearest to p is the circle intersection at (0.5, ±√3/2).
        let oracle = boundary_sampling_sdf(&prims, &p, 100_000);
        assert!((oracle - (-(3f64.sqrt()) / 2.0)).abs() < 1e-3, "oracle {oracle}");
        assert!(fused >= oracle);
        // Outside the overlap band the min rule is exact.
        let q = vector![-0.5, 0.0];
        let q_vals: Vec<f64> = prims.iter().map(|pr| pr.sdf(&q)).collect();
        let q_fused = sdf_union(&q_vals).unwrap();
        let q_oracle = boundary_sampling_sdf(&prims, &q, 100_000);
        assert!((q_fused - q_oracle).abs() < 1e-3, "{q_fused} vs {q_oracle}");
    }

    #[test]
    fn disjoint_circles_positive_between() {
        let prims = vec![
            Primitive::Ball {
                center: vector![-2.0, 0.0],
                radius: 1.0,
            },
            Primitive::Ball {
                center: vector![2.0, 0.0],
                radius: 1.0,
            },
        ];
        let p = vector![0.0, 0.0];
        let values: Vec<f64> = prims.iter().map(|pr| pr.sdf(&p)).collect();
        let fused = sdf_intersection(&values).unwrap();
        assert!(fused > 0.0);
        // Between disjoint shapes the union SDF from the oracle is also positive
        // and equals the min rule exactly (no overlap).
        let union = sdf_union(&values).unwrap();
        let oracle = boundary_sampling_sdf(&prims, &p, 100_000);
        assert!((union - oracle).abs() < 1e-3);
    }

    #[test]
    fn union_results_stay_one_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prims = vec![
            Primitive::Ball {
                center: vector![0.0, 0.0],
                radius: 1.0,
            },
            Primitive::AxisBox {
                min: vector![1.0, -0.5],
                max: vector![2.0, 0.5],
            },
            Primitive::Capsule {
                a: vector![-2.0, -1.0],
                b: vector![-1.0, 1.0],
                radius: 0.3,
            },
        ];
        let fused = |p: &Point<2>| {
            let vals: Vec<f64> = prims.iter().map(|pr| pr.sdf(p)).collect();
            sdf_union(&vals).unwrap()
        };
        for _ in 0..500 {
            let p = vector![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let q = vector![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            assert!((fused(&p) - fused(&q)).abs() <= (p - q).norm() + 1e-12);
        }
    }
}
