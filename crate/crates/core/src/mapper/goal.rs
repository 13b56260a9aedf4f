use serde::{Deserialize, Serialize};

use crate::geom::{Bbox, Point};

use super::{GlobalSdfMap, MapperError};

/// Exploration-goal selection knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalConfig {
    /// Grid cell size over the candidate region, meters.
    pub cell: f64,
    /// Margin added to the explored bbox before sampling, meters.
    pub inflate: f64,
    /// Required fused clearance beyond the robot radius, meters.
    pub clearance: f64,
    pub robot_radius: f64,
}

impl Default for GoalConfig {
    fn default() -> Self {
        Self {
            cell: 0.5,
            inflate: 1.0,
            clearance: 0.2,
            robot_radius: 0.3,
        }
    }
}

/// Picks the next exploration goal: grid-sample the inflated explored
/// region, keep candidates with enough learned clearance, and return the one
/// with minimum fused confidence. Ties prefer the candidate farthest from
/// the robot, then the lowest grid index. Deterministic.
pub fn select_goal<const D: usize>(
    map: &GlobalSdfMap<D>,
    robot: &Point<D>,
    explored: &Bbox<D>,
    world_bounds: &Bbox<D>,
    cfg: &GoalConfig,
) -> Result<Point<D>, MapperError> {
    if map.is_empty() {
        return Err(MapperError::EmptyMap);
    }
    let region = explored
        .inflate(cfg.inflate)
        .intersect(world_bounds)
        .unwrap_or(*world_bounds);

    let mut counts = [0usize; D];
    let mut total = 1usize;
    for k in 0..D {
        counts[k] = (((region.max[k] - region.min[k]) / cfg.cell).floor() as usize).max(1);
        total *= counts[k];
    }

    let mut best: Option<(f64, f64, Point<D>)> = None; // (confidence, distance, point)
    for flat in 0..total {
        let mut rem = flat;
        let mut p = Point::<D>::zeros();
        for k in 0..D {
            let i = rem % counts[k];
            rem /= counts[k];
            p[k] = region.min[k] + (i as f64 + 0.5) * cfg.cell;
        }
        let s = map.global_query(&p)?;
        if s <= cfg.robot_radius + cfg.clearance {
            continue;
        }
        let c = map.global_confidence(&p)?;
        let dist = (p - robot).norm();
        let better = match &best {
            None => true,
            Some((bc, bd, _)) => c < *bc || (c == *bc && dist > *bd),
        };
        if better {
            best = Some((c, dist, p));
        }
    }
    best.map(|(_, _, p)| p).ok_or(MapperError::NoReachableGoal)
}
