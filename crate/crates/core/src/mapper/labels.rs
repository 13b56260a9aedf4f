use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{directed_hausdorff_to_index, NnIndex, Point};
use crate::sim::LidarScan;

use super::MapperConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Surface,
    Free,
    Interior,
}

/// One training triple: point, signed-distance label, confidence label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample<const D: usize> {
    pub p: Point<D>,
    pub s: f64,
    pub c: f64,
    pub kind: SampleKind,
}

/// Confidence label of an interior sample at along-ray depth `d` past the
/// hit: `(b^w - 1)/(b - 1) + 1e-7` with `w = 1 - d/d_max`.
pub fn confidence_label(depth: f64, d_max: f64, base: f64) -> f64 {
    let w = 1.0 - depth / d_max;
    (base.powf(w) - 1.0) / (base - 1.0) + 1e-7
}

/// Scan novelty gate. The first scan (no stored surface) is accepted; later
/// scans must stray from the stored surface by more than `tau_ingest` in
/// directed Hausdorff distance. A scan without hits carries nothing to learn
/// and is rejected.
pub fn accept_scan<const D: usize>(
    scan: &LidarScan<D>,
    stored_surface: Option<&NnIndex<D>>,
    tau_ingest: f64,
) -> bool {
    let hits = scan.hit_points();
    if hits.is_empty() {
        return false;
    }
    match stored_surface {
        None => true,
        Some(index) => {
            let d = directed_hausdorff_to_index(&hits, index).expect("hits checked non-empty");
            d > tau_ingest
        }
    }
}

/// Expands one accepted scan into labeled samples.
///
/// Per hit ray: stratified-uniform free-space samples strictly between the
/// origin and the hit (distance to the nearest stored surface point, full
/// confidence), stratified interior samples up to `interior_depth` past the
/// hit (negated nearest-surface distance, exponentially decaying
/// confidence), and the hit itself as a surface sample. `surface_index` must
/// already contain both the stored and this scan's surface points. In 3D
/// mode rays hitting within `floor_margin` of the floor plane are dropped.
pub fn augment_scan<const D: usize, R: Rng>(
    scan: &LidarScan<D>,
    surface_index: &NnIndex<D>,
    cfg: &MapperConfig,
    floor_height: Option<f64>,
    rng: &mut R,
) -> Vec<LabeledSample<D>> {
    let mut out = Vec::new();
    for ((dir, &range), &hit) in scan
        .directions
        .iter()
        .zip(&scan.ranges)
        .zip(&scan.hit_mask)
    {
        if !hit {
            continue;
        }
        let hit_point = scan.origin + dir * range;
        if let Some(floor) = floor_height {
            if D == 3 && (hit_point[D - 1] - floor).abs() <= cfg.floor_margin {
                continue;
            }
        }

        for i in 0..cfg.free_per_ray {
            let u: f64 = rng.gen::<f64>().max(1e-9);
            let t = range * (i as f64 + u) / cfg.free_per_ray as f64;
            let p = scan.origin + dir * t;
            let (s, _) = surface_index.nearest(&p);
            out.push(LabeledSample {
                p,
                s,
                c: 1.0,
                kind: SampleKind::Free,
            });
        }

        for i in 0..cfg.interior_per_ray {
            let u: f64 = rng.gen::<f64>().max(1e-9);
            let depth = cfg.interior_depth * (i as f64 + u) / cfg.interior_per_ray as f64;
            let p = hit_point + dir * depth;
            let (s, _) = surface_index.nearest(&p);
            out.push(LabeledSample {
                p,
                s: -s,
                c: confidence_label(depth, cfg.interior_depth, cfg.confidence_base),
                kind: SampleKind::Interior,
            });
        }

        out.push(LabeledSample {
            p: hit_point,
            s: 0.0,
            c: 1.0,
            kind: SampleKind::Surface,
        });
    }
    out
}
