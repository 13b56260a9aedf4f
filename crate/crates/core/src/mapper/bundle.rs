//! Map bundle directory: one checkpoint file per local map plus a JSON
//! manifest with the fusion sharpness, region boxes, and the thresholds the
//! run used.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::Bbox;
use crate::net::{load_checkpoint_file, save_checkpoint_file};

use super::global_map::{GlobalSdfMap, LocalMapRecord};
use super::{MapperConfig, MapperError};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleEntry<const D: usize> {
    pub file: String,
    pub active: bool,
    pub created_step: u64,
    pub final_loss: Option<f64>,
    pub region: Option<Bbox<D>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleManifest<const D: usize> {
    pub alpha: f64,
    pub entries: Vec<BundleEntry<D>>,
    pub thresholds: MapperConfig,
}

pub fn save_bundle<const D: usize>(
    dir: &Path,
    map: &GlobalSdfMap<D>,
    cfg: &MapperConfig,
) -> Result<(), MapperError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (i, record) in map.records.iter().enumerate() {
        let file = format!("map_{i:03}.ckpt");
        save_checkpoint_file(&dir.join(&file), &record.params)?;
        entries.push(BundleEntry {
            file,
            active: false,
            created_step: record.created_step,
            final_loss: Some(record.final_loss),
            region: record.region,
        });
    }
    if let Some(active) = &map.active {
        let file = "active.ckpt".to_string();
        save_checkpoint_file(&dir.join(&file), active)?;
        entries.push(BundleEntry {
            file,
            active: true,
            created_step: u64::MAX,
            final_loss: None,
            region: None,
        });
    }
    let manifest = BundleManifest::<D> {
        alpha: map.alpha,
        entries,
        thresholds: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| MapperError::BadBundle(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_bundle<const D: usize>(dir: &Path) -> Result<(GlobalSdfMap<D>, MapperConfig), MapperError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| MapperError::BadBundle(format!("{}: {e}", manifest_path.display())))?;
    let manifest: BundleManifest<D> =
        serde_json::from_str(&text).map_err(|e| MapperError::BadBundle(e.to_string()))?;
    let mut map = GlobalSdfMap::new(manifest.alpha);
    for entry in &manifest.entries {
        let params = load_checkpoint_file(&dir.join(&entry.file))?;
        if entry.active {
            map.active = Some(params);
        } else {
            map.records.push(LocalMapRecord {
                params,
                region: entry.region,
                created_step: entry.created_step,
                final_loss: entry.final_loss.unwrap_or(0.0),
            });
        }
    }
    if map.is_empty() {
        return Err(MapperError::BadBundle("bundle contains no maps".into()));
    }
    Ok((map, manifest.thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{NetConfig, NetParams};
    use nalgebra::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bundle_roundtrip_reproduces_queries() {
        let bounds = Bbox::new(vector![-3.0, -3.0], vector![3.0, 3.0]).unwrap();
        let cfg = NetConfig {
            frequencies: 8,
            hidden: 12,
            sigma_b: 0.8,
        };
        let mut map = GlobalSdfMap::new(100.0);
        for seed in 0..3 {
            map.records.push(LocalMapRecord {
                params: NetParams::init(seed, &cfg, &bounds),
                region: Some(bounds),
                created_step: seed * 10,
                final_loss: 0.5,
            });
        }
        map.active = Some(NetParams::init(77, &cfg, &bounds));

        let dir = tempfile::tempdir().unwrap();
        let mapper_cfg = MapperConfig::default();
        save_bundle(dir.path(), &map, &mapper_cfg).unwrap();
        let (loaded, loaded_cfg) = load_bundle::<2>(dir.path()).unwrap();
        assert_eq!(loaded_cfg, mapper_cfg);
        assert_eq!(loaded.records.len(), 3);
        assert!(loaded.active.is_some());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = vector![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(
                map.global_query(&p).unwrap().to_bits(),
                loaded.global_query(&p).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn missing_manifest_is_a_bad_bundle() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_bundle::<2>(dir.path()),
            Err(MapperError::BadBundle(_))
        ));
    }
}
