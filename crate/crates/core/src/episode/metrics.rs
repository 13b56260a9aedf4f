use serde::{Deserialize, Serialize};

use crate::geom::{extract_level_set_2d, Bbox, NnIndex, Point};
use crate::mapper::GlobalSdfMap;
use crate::sim::WorldSpec;

use super::config::MetricsSection;
use super::EpisodeError;

/// Region of the world observed so far: the union of discs of LiDAR range
/// around the scan poses.
#[derive(Clone, Debug, Default)]
pub struct VisitedMask {
    pub centers: Vec<Point<2>>,
    pub radius: f64,
}

impl VisitedMask {
    pub fn contains(&self, p: &Point<2>) -> bool {
        self.centers.iter().any(|c| (p - c).norm() <= self.radius)
    }
}

/// Map-quality and episode metrics. Quality numbers are `None` when the
/// confident region (or level set) is empty.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metrics {
    /// Symmetric mean nearest distance between the learned zero level set
    /// and dense ground-truth surface samples, restricted to the visited
    /// mask, meters.
    pub chamfer: Option<f64>,
    /// Mean |learned - true| SDF over confident near-surface grid cells.
    pub grid_mae: Option<f64>,
    /// RMS of (grad norm - 1) of the selected map over the same cells.
    pub eikonal_rms: Option<f64>,
    pub local_map_count: usize,
    pub collision_count: usize,
    /// Fraction of reachable free space covered by scans.
    pub coverage: f64,
    /// Simulated seconds until the first exploration goal was reached.
    pub goal_reach_time: Option<f64>,
    /// Goals reached over the episode.
    pub goals_reached: usize,
}

/// Chamfer, confident-band MAE, and Eikonal RMS of a map against the exact
/// world.
pub fn map_quality(
    map: &GlobalSdfMap<2>,
    world: &WorldSpec<2>,
    mask: &VisitedMask,
    cfg: &MetricsSection,
) -> Result<(Option<f64>, Option<f64>, Option<f64>), EpisodeError> {
    if map.is_empty() {
        return Ok((None, None, None));
    }
    let bounds = &world.bounds;

    // Level set of the hard-argmax field, via a precomputed corner grid so
    // every network runs one batched forward.
    let res = cfg.levelset_resolution;
    let n = res + 1;
    let step = [
        (bounds.max[0] - bounds.min[0]) / res as f64,
        (bounds.max[1] - bounds.min[1]) / res as f64,
    ];
    let mut corners = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            corners.push(Point::<2>::new(
                bounds.min[0] + i as f64 * step[0],
                bounds.min[1] + j as f64 * step[1],
            ));
        }
    }
    let (corner_values, _, _) = map.query_batch(&corners).map_err(EpisodeError::Mapper)?;
    let lookup = |p: &Point<2>| -> f64 {
        let i = ((p[0] - bounds.min[0]) / step[0]).round() as usize;
        let j = ((p[1] - bounds.min[1]) / step[1]).round() as usize;
        corner_values[j.min(res) * n + i.min(res)]
    };
    let segments = extract_level_set_2d(lookup, bounds, res, 0.0)?;
    let mut learned_vertices: Vec<Point<2>> = Vec::with_capacity(2 * segments.len());
    for s in &segments {
        for v in [s.a, s.b] {
            if mask.contains(&v) {
                learned_vertices.push(v);
            }
        }
    }
    let gt_surface: Vec<Point<2>> = world
        .sample_boundary(cfg.chamfer_spacing)
        .into_iter()
        .filter(|p| mask.contains(p))
        .collect();

    let chamfer = if learned_vertices.is_empty() || gt_surface.is_empty() {
        None
    } else {
        let gt_index = NnIndex::build(gt_surface.clone())?;
        let learned_index = NnIndex::build(learned_vertices.clone())?;
        let forward: f64 = learned_vertices
            .iter()
            .map(|v| gt_index.nearest(v).0)
            .sum::<f64>()
            / learned_vertices.len() as f64;
        let backward: f64 = gt_surface
            .iter()
            .map(|v| learned_index.nearest(v).0)
            .sum::<f64>()
            / gt_surface.len() as f64;
        Some(0.5 * (forward + backward))
    };

    // Confident-band grid MAE and Eikonal RMS.
    let cell = cfg.grid_cell;
    let nx = (((bounds.max[0] - bounds.min[0]) / cell).floor() as usize).max(1);
    let ny = (((bounds.max[1] - bounds.min[1]) / cell).floor() as usize).max(1);
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            centers.push(Point::<2>::new(
                bounds.min[0] + (i as f64 + 0.5) * cell,
                bounds.min[1] + (j as f64 + 0.5) * cell,
            ));
        }
    }
    let (values, confs, selected) = map.query_batch(&centers).map_err(EpisodeError::Mapper)?;
    let nets: Vec<_> = map.nets().collect();
    let mut abs_err_sum = 0.0;
    let mut eik_sq_sum = 0.0;
    let mut count = 0usize;
    for (idx, p) in centers.iter().enumerate() {
        let gt = world.sdf(p);
        if confs[idx] < cfg.confidence_band || gt.abs() > cfg.sdf_band {
            continue;
        }
        abs_err_sum += (values[idx] - gt).abs();
        let dual = nets[selected[idx]].forward_with_input_grad(p);
        let g = dual.grad.norm() - 1.0;
        eik_sq_sum += g * g;
        count += 1;
    }
    let (grid_mae, eikonal_rms) = if count == 0 {
        (None, None)
    } else {
        (
            Some(abs_err_sum / count as f64),
            Some((eik_sq_sum / count as f64).sqrt()),
        )
    };

    Ok((chamfer, grid_mae, eikonal_rms))
}

/// Mean |learned - true| over a region's near-surface cells: the plain value
/// and the confidence-gated value.
pub fn region_mae(
    map: &GlobalSdfMap<2>,
    world: &WorldSpec<2>,
    region: &Bbox<2>,
    cfg: &MetricsSection,
) -> (Option<f64>, Option<f64>) {
    if map.is_empty() {
        return (None, None);
    }
    let cell = cfg.grid_cell;
    let nx = (((region.max[0] - region.min[0]) / cell).floor() as usize).max(1);
    let ny = (((region.max[1] - region.min[1]) / cell).floor() as usize).max(1);
    let mut centers = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            centers.push(Point::<2>::new(
                region.min[0] + (i as f64 + 0.5) * cell,
                region.min[1] + (j as f64 + 0.5) * cell,
            ));
        }
    }
    let (values, confs, _) = match map.query_batch(&centers) {
        Ok(v) => v,
        Err(_) => return (None, None),
    };
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut gated_sum = 0.0;
    let mut gated_count = 0usize;
    for (idx, p) in centers.iter().enumerate() {
        let gt = world.sdf(p);
        if gt.abs() > cfg.sdf_band {
            continue;
        }
        let err = (values[idx] - gt).abs();
        sum += err;
        count += 1;
        if confs[idx] >= cfg.confidence_band {
            gated_sum += err;
            gated_count += 1;
        }
    }
    (
        (count > 0).then(|| sum / count as f64),
        (gated_count > 0).then(|| gated_sum / gated_count as f64),
    )
}

/// Fraction of reachable free configuration space inside the visited mask.
///
/// Reachable cells (centers with ground-truth clearance at least the robot
/// radius) are flood-filled from the start cell with 4-connectivity.
pub fn coverage_fraction(
    world: &WorldSpec<2>,
    mask: &VisitedMask,
    start: &Point<2>,
    robot_radius: f64,
    cell: f64,
) -> f64 {
    let bounds = &world.bounds;
    let nx = (((bounds.max[0] - bounds.min[0]) / cell).floor() as usize).max(1);
    let ny = (((bounds.max[1] - bounds.min[1]) / cell).floor() as usize).max(1);
    let center = |i: usize, j: usize| {
        Point::<2>::new(
            bounds.min[0] + (i as f64 + 0.5) * cell,
            bounds.min[1] + (j as f64 + 0.5) * cell,
        )
    };
    let free: Vec<bool> = (0..nx * ny)
        .map(|idx| world.sdf(&center(idx % nx, idx / nx)) >= robot_radius)
        .collect();

    let si = (((start[0] - bounds.min[0]) / cell) as usize).min(nx - 1);
    let sj = (((start[1] - bounds.min[1]) / cell) as usize).min(ny - 1);
    let mut reachable = vec![false; nx * ny];
    let mut stack = Vec::new();
    if free[sj * nx + si] {
        reachable[sj * nx + si] = true;
        stack.push((si, sj));
    }
    while let Some((i, j)) = stack.pop() {
        let mut visit = |ii: usize, jj: usize, stack: &mut Vec<(usize, usize)>| {
            let idx = jj * nx + ii;
            if free[idx] && !reachable[idx] {
                reachable[idx] = true;
                stack.push((ii, jj));
            }
        };
        if i > 0 {
            visit(i - 1, j, &mut stack);
        }
        if i + 1 < nx {
            visit(i + 1, j, &mut stack);
        }
        if j > 0 {
            visit(i, j - 1, &mut stack);
        }
        if j + 1 < ny {
            visit(i, j + 1, &mut stack);
        }
    }

    let mut total = 0usize;
    let mut covered = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            if reachable[j * nx + i] {
                total += 1;
                if mask.contains(&center(i, j)) {
                    covered += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

/// Full metric computation for a finished map. Episode-level counters
/// (collisions, goals) are filled by the caller.
pub fn compute_metrics(
    map: &GlobalSdfMap<2>,
    world: &WorldSpec<2>,
    mask: &VisitedMask,
    start: &Point<2>,
    robot_radius: f64,
    cfg: &MetricsSection,
) -> Result<Metrics, EpisodeError> {
    let (chamfer, grid_mae, eikonal_rms) = map_quality(map, world, mask, cfg)?;
    Ok(Metrics {
        chamfer,
        grid_mae,
        eikonal_rms,
        local_map_count: map.map_count(),
        collision_count: 0,
        coverage: coverage_fraction(world, mask, start, robot_radius, cfg.coverage_cell),
        goal_reach_time: None,
        goals_reached: 0,
    })
}
