use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{extract_level_set_2d, write_segments_csv, Point};
use crate::mapper::{export_dataset_csv, save_bundle, OnlineMapper};
use crate::sim::WorldSpec;

use super::config::EpisodeConfig;
use super::metrics::{Metrics, VisitedMask};
use super::EpisodeError;

/// One row per simulated dynamics step.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrajRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    /// Ground-truth clearance of the body disc, meters.
    pub min_clearance: f64,
}

/// One row per MPC invocation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlannerRow {
    pub step: usize,
    pub scp_iters: usize,
    pub converged: bool,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub min_d: f64,
    /// Wall-clock solve time; the one deliberately nondeterministic column.
    pub solve_ms: f64,
}

/// One row per training step.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainRow {
    pub step: u64,
    pub total: f64,
    pub huber_sdf: f64,
    pub huber_conf: f64,
    pub eikonal: f64,
    pub linf: f64,
}

/// One row of the region-tagged forgetting curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForgetRow {
    pub scan: usize,
    pub region: String,
    pub mae: Option<f64>,
    pub mae_confident: Option<f64>,
}

/// Everything a finished episode produced.
#[derive(Debug)]
pub struct EpisodeReport {
    pub config: EpisodeConfig,
    pub world: WorldSpec<2>,
    pub mapper: OnlineMapper<2>,
    pub mask: VisitedMask,
    pub trajectory: Vec<TrajRow>,
    pub planner_log: Vec<PlannerRow>,
    pub training_log: Vec<TrainRow>,
    pub forgetting: Vec<ForgetRow>,
    pub metrics: Metrics,
    pub elapsed_s: f64,
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), EpisodeError> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Writes every artifact of a run into `outdir`: metrics, logs, the level
/// set, the map bundle, a dataset snapshot, and a machine-readable manifest.
/// All files except `planner.csv` (wall-clock column) are byte-stable per
/// seed.
pub fn export_artifacts(report: &EpisodeReport, outdir: &Path) -> Result<(), EpisodeError> {
    fs::create_dir_all(outdir)?;

    write_file(&outdir.join("metrics.csv"), |w| {
        writeln!(
            w,
            "chamfer,grid_mae,eikonal_rms,local_map_count,collision_count,coverage,goal_reach_time,goals_reached"
        )?;
        let m = &report.metrics;
        let opt = |v: &Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        writeln!(
            w,
            "{},{},{},{},{},{:?},{},{}",
            opt(&m.chamfer),
            opt(&m.grid_mae),
            opt(&m.eikonal_rms),
            m.local_map_count,
            m.collision_count,
            m.coverage,
            opt(&m.goal_reach_time),
            m.goals_reached,
        )?;
        Ok(())
    })?;

    write_file(&outdir.join("trajectory.csv"), |w| {
        writeln!(w, "t,x,y,theta,v,omega,min_clearance")?;
        for r in &report.trajectory {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.t, r.x, r.y, r.theta, r.v, r.omega, r.min_clearance
            )?;
        }
        Ok(())
    })?;

    write_file(&outdir.join("planner.csv"), |w| {
        writeln!(w, "step,scp_iters,converged,c1,c2,c3,c4,min_d,solve_ms")?;
        for r in &report.planner_log {
            writeln!(
                w,
                "{},{},{},{:?},{:?},{:?},{:?},{:?},{:.3}",
                r.step, r.scp_iters, r.converged, r.c1, r.c2, r.c3, r.c4, r.min_d, r.solve_ms
            )?;
        }
        Ok(())
    })?;

    write_file(&outdir.join("training.csv"), |w| {
        writeln!(w, "step,total,huber_sdf,huber_conf,eikonal,linf")?;
        for r in &report.training_log {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?},{:?}",
                r.step, r.total, r.huber_sdf, r.huber_conf, r.eikonal, r.linf
            )?;
        }
        Ok(())
    })?;

    write_file(&outdir.join("forgetting.csv"), |w| {
        writeln!(w, "scan,region,mae,mae_confident")?;
        for r in &report.forgetting {
            let opt = |v: &Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
            writeln!(w, "{},{},{},{}", r.scan, r.region, opt(&r.mae), opt(&r.mae_confident))?;
        }
        Ok(())
    })?;

    // Zero level set of the final map.
    if !report.mapper.map.is_empty() {
        let res = report.config.file.metrics.levelset_resolution;
        let bounds = report.world.bounds;
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
        let (values, _, _) = report.mapper.map.query_batch(&corners)?;
        let lookup = |p: &Point<2>| -> f64 {
            let i = ((p[0] - bounds.min[0]) / step[0]).round() as usize;
            let j = ((p[1] - bounds.min[1]) / step[1]).round() as usize;
            values[j.min(res) * n + i.min(res)]
        };
        let segments = extract_level_set_2d(lookup, &bounds, res, 0.0)?;
        write_file(&outdir.join("levelset.csv"), |w| {
            write_segments_csv(w, &segments)
        })?;
    }

    save_bundle(&outdir.join("bundle"), &report.mapper.map, &report.mapper.cfg)?;

    write_file(&outdir.join("dataset.csv"), |w| {
        export_dataset_csv(w, &report.mapper.dataset)
    })?;

    let manifest = serde_json::json!({
        "seed": report.config.seed,
        "mode": report.config.mode.to_string(),
        "config_hash": report.config.config_hash(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(&report.config).expect("serializable"),
        "outputs": [
            "metrics.csv", "trajectory.csv", "planner.csv", "training.csv",
            "forgetting.csv", "levelset.csv", "bundle", "dataset.csv"
        ],
    });
    write_file(&outdir.join("manifest.json"), |w| {
        w.write_all(serde_json::to_string_pretty(&manifest).expect("json").as_bytes())
    })?;

    Ok(())
}
