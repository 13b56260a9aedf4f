use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::Point;

use super::{RobotPose, WorldSpec};

const TRACE_TOLERANCE: f64 = 1e-4;
const TRACE_STEP_FACTOR: f64 = 0.99;
const TRACE_MAX_STEPS: usize = 256;

/// Scanner geometry and noise model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LidarConfig {
    /// Bearings per revolution (per ring in 3D mode).
    pub rays: usize,
    pub max_range: f64,
    /// Std-dev of Gaussian range noise in meters; 0 disables the draw.
    pub noise_sigma: f64,
    /// Ring elevation angles in radians; empty means a single planar ring.
    #[serde(default)]
    pub rings: Vec<f64>,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            rays: 360,
            max_range: 8.0,
            noise_sigma: 0.0,
            rings: Vec::new(),
        }
    }
}

/// Pose-stamped scan: per-ray unit direction, range, and hit flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LidarScan<const D: usize> {
    pub origin: Point<D>,
    pub directions: Vec<Point<D>>,
    pub ranges: Vec<f64>,
    pub hit_mask: Vec<bool>,
    pub max_range: f64,
}

impl<const D: usize> LidarScan<D> {
    /// World-frame hit points for rays that struck a surface.
    pub fn hit_points(&self) -> Vec<Point<D>> {
        self.directions
            .iter()
            .zip(&self.ranges)
            .zip(&self.hit_mask)
            .filter(|(_, &hit)| hit)
            .map(|((dir, &range), _)| self.origin + dir * range)
            .collect()
    }

    pub fn hit_count(&self) -> usize {
        self.hit_mask.iter().filter(|&&h| h).count()
    }
}

/// Simulates one scan by sphere tracing the exact world SDF.
///
/// Bearings are equally spaced over a full revolution starting at the robot
/// heading. Tracing advances by `0.99 * sdf` per step, which cannot cross the
/// surface of a 1-Lipschitz field; a ray that fails to converge within the
/// step budget is reported as a miss. Optional Gaussian range noise is added
/// along the ray and clamped to `[0, max_range]`.
pub fn lidar_scan<const D: usize, R: Rng>(
    world: &WorldSpec<D>,
    pose: &RobotPose<D>,
    cfg: &LidarConfig,
    rng: &mut R,
) -> LidarScan<D> {
    let planar_only = [0.0];
    let elevations: &[f64] = if D == 3 && !cfg.rings.is_empty() {
        &cfg.rings
    } else {
        &planar_only
    };

    let total = cfg.rays * elevations.len();
    let mut directions = Vec::with_capacity(total);
    let mut ranges = Vec::with_capacity(total);
    let mut hit_mask = Vec::with_capacity(total);

    let noise = if cfg.noise_sigma > 0.0 {
        Some(Normal::new(0.0, cfg.noise_sigma).expect("valid sigma"))
    } else {
        None
    };

    for &elev in elevations {
        let (elev_sin, elev_cos) = elev.sin_cos();
        for k in 0..cfg.rays {
            let bearing = pose.heading + std::f64::consts::TAU * k as f64 / cfg.rays as f64;
            let (b_sin, b_cos) = bearing.sin_cos();
            let mut dir = Point::<D>::zeros();
            dir[0] = elev_cos * b_cos;
            dir[1] = elev_cos * b_sin;
            if D == 3 {
                dir[2] = elev_sin;
            }
            let traced = sphere_trace(world, &pose.position, &dir, cfg.max_range);
            let (mut range, hit) = match traced {
                Some(t) => (t, true),
                None => (cfg.max_range, false),
            };
            if hit {
                if let Some(n) = &noise {
                    range = (range + n.sample(rng)).clamp(0.0, cfg.max_range);
                }
            }
            directions.push(dir);
            ranges.push(range);
            hit_mask.push(hit);
        }
    }

    LidarScan {
        origin: pose.position,
        directions,
        ranges,
        hit_mask,
        max_range: cfg.max_range,
    }
}

fn sphere_trace<const D: usize>(
    world: &WorldSpec<D>,
    origin: &Point<D>,
    dir: &Point<D>,
    max_range: f64,
) -> Option<f64> {
    let mut t = 0.0;
    for _ in 0..TRACE_MAX_STEPS {
        let d = world.sdf(&(origin + dir * t));
        if d.abs() < TRACE_TOLERANCE {
            return Some(t);
        }
        t += TRACE_STEP_FACTOR * d;
        if t >= max_range || t < 0.0 {
            return None;
        }
    }
    None
}
