use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::Bbox;
use crate::net::{
    AmsGrad, LossBreakdown, LossWeights, NetConfig, NetError, NetParams, OptimizerConfig,
};
use crate::sim::LidarScan;

use super::dataset::TrainingSet;
use super::global_map::{GlobalSdfMap, LocalMapRecord};
use super::labels::{accept_scan, augment_scan};
use super::{MapperConfig, MapperError};

/// The in-training local map: parameters, optimizer state, loss EMA, and the
/// cache/waiting bookkeeping.
#[derive(Clone, Debug)]
pub struct ActiveTrainer<const D: usize> {
    pub params: NetParams<f32, D>,
    pub opt: AmsGrad<f32>,
    pub loss_ema: Option<f64>,
    pub steps: usize,
    below_count: usize,
    pub waiting: bool,
    /// Deep copy of the last parameters that produced a finite loss, kept so
    /// a divergence error still leaves a usable checkpoint behind.
    last_finite: NetParams<f32, D>,
    /// Bbox of surface samples ingested during this map's training life.
    pub region: Option<Bbox<D>>,
}

impl<const D: usize> ActiveTrainer<D> {
    pub fn new(params: NetParams<f32, D>, opt_cfg: OptimizerConfig) -> Self {
        let opt = AmsGrad::new(opt_cfg, &params);
        Self {
            last_finite: params.clone(),
            params,
            opt,
            loss_ema: None,
            steps: 0,
            below_count: 0,
            waiting: false,
            region: None,
        }
    }

    pub fn last_finite(&self) -> &NetParams<f32, D> {
        &self.last_finite
    }

    /// One training step: weighted batch draw, loss with gradients, AMSGrad
    /// update, EMA bookkeeping. Divergence leaves `last_finite` intact and
    /// surfaces as an error.
    pub fn train_step<R: Rng>(
        &mut self,
        dataset: &TrainingSet<D>,
        cfg: &MapperConfig,
        weights: &LossWeights,
        rng: &mut R,
    ) -> Result<LossBreakdown, MapperError> {
        if self.waiting {
            return Err(MapperError::Waiting);
        }
        let (pts, s, c) = dataset.sample_batch(cfg.batch_size, cfg.weight_epsilon, rng);
        let (breakdown, grads) = match self.params.loss_and_param_grads(&pts, &s, &c, weights) {
            Ok(v) => v,
            Err(NetError::NonFinite(_)) => return Err(MapperError::Diverged),
            Err(e) => return Err(e.into()),
        };
        self.opt.step(&mut self.params, &grads).map_err(MapperError::Net)?;
        self.last_finite = self.params.clone();
        self.steps += 1;
        let ema = match self.loss_ema {
            None => breakdown.total,
            Some(prev) => cfg.ema_decay * prev + (1.0 - cfg.ema_decay) * breakdown.total,
        };
        self.loss_ema = Some(ema);
        if ema * cfg.cache_loss_scale < cfg.tau_cache {
            self.below_count += 1;
        } else {
            self.below_count = 0;
        }
        Ok(breakdown)
    }

    /// True when the loss EMA has stayed under the cache threshold long
    /// enough, or the per-map step budget ran out.
    pub fn should_cache(&self, cfg: &MapperConfig) -> bool {
        self.below_count >= cfg.cache_patience
            || (cfg.max_steps_per_map > 0 && self.steps >= cfg.max_steps_per_map)
    }

    /// True when the pending scan strays from the previous cached map's zero
    /// level set by more than `tau_wait` (measured by |S_prev| at the scan
    /// points, the implicit-surface surrogate for scan-to-map distance).
    pub fn waiting_over(
        prev: &LocalMapRecord<D>,
        scan: &LidarScan<D>,
        tau_wait: f64,
    ) -> bool {
        let hits = scan.hit_points();
        if hits.is_empty() {
            return false;
        }
        hits.iter()
            .map(|p| prev.params.forward_one(p).0.abs())
            .fold(0.0, f64::max)
            > tau_wait
    }
}

/// Full continual-mapping pipeline: gating, augmentation, bounded dataset,
/// local-map lifecycle, and the fused global map.
#[derive(Clone, Debug)]
pub struct OnlineMapper<const D: usize> {
    pub cfg: MapperConfig,
    pub net_cfg: NetConfig,
    pub opt_cfg: OptimizerConfig,
    pub loss_weights: LossWeights,
    pub dataset: TrainingSet<D>,
    pub trainer: ActiveTrainer<D>,
    pub map: GlobalSdfMap<D>,
    pub world_bounds: Bbox<D>,
    /// Total training steps across all local maps.
    pub global_step: u64,
    pub scans_accepted: u64,
    pub scans_seen: u64,
}

impl<const D: usize> OnlineMapper<D> {
    pub fn new(
        seed: u64,
        cfg: MapperConfig,
        net_cfg: NetConfig,
        opt_cfg: OptimizerConfig,
        loss_weights: LossWeights,
        world_bounds: Bbox<D>,
    ) -> Self {
        let params = NetParams::init(seed, &net_cfg, &world_bounds);
        let trainer = ActiveTrainer::new(params, opt_cfg);
        let dataset = TrainingSet::new(cfg.surface_capacity, cfg.augmented_capacity);
        let map = GlobalSdfMap::new(cfg.softmax_sharpness);
        Self {
            cfg,
            net_cfg,
            opt_cfg,
            loss_weights,
            dataset,
            trainer,
            map,
            world_bounds,
            global_step: 0,
            scans_accepted: 0,
            scans_seen: 0,
        }
    }

    /// Gates one scan and, when accepted, augments and merges it into the
    /// training set. Also releases the waiting period when the scan is far
    /// enough from the previous cached map. Returns whether it was accepted.
    pub fn ingest_scan(
        &mut self,
        scan: &LidarScan<D>,
        floor_height: Option<f64>,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        self.ingest_scan_with(scan, floor_height, false, rng)
    }

    /// Like `ingest_scan`, with the novelty gate optionally bypassed
    /// (baselines ingest every scan).
    pub fn ingest_scan_with(
        &mut self,
        scan: &LidarScan<D>,
        floor_height: Option<f64>,
        force: bool,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        self.scans_seen += 1;
        if self.trainer.waiting {
            if let Some(prev) = self.map.records.last() {
                if ActiveTrainer::waiting_over(prev, scan, self.cfg.tau_wait) {
                    self.trainer.waiting = false;
                }
            } else {
                self.trainer.waiting = false;
            }
        }
        let stored = self.dataset.surface_index();
        let accepted = if force {
            scan.hit_count() > 0
        } else {
            accept_scan(scan, stored.as_ref(), self.cfg.tau_ingest)
        };
        if !accepted {
            return false;
        }
        // Index over stored plus this scan's surface points for labeling.
        let mut all_surface = self.dataset.surface_points();
        all_surface.extend(scan.hit_points());
        let index = crate::geom::NnIndex::build(all_surface).expect("non-empty by gating");
        let samples = augment_scan(scan, &index, &self.cfg, floor_height, rng);
        for s in &samples {
            if matches!(s.kind, super::labels::SampleKind::Surface) {
                match &mut self.trainer.region {
                    Some(r) => r.extend(&s.p),
                    None => {
                        self.trainer.region = Some(Bbox {
                            min: s.p,
                            max: s.p,
                        })
                    }
                }
            }
        }
        self.dataset.merge(samples, rng);
        self.scans_accepted += 1;
        true
    }

    /// Runs up to `n` training steps (skipped while waiting or before any
    /// data arrived), caching the active map whenever it converges. Publishes
    /// the active snapshot afterwards.
    pub fn train(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<LossBreakdown>, MapperError> {
        let mut out = Vec::new();
        if self.dataset.is_empty() {
            return Ok(out);
        }
        for _ in 0..n {
            if self.trainer.waiting {
                break;
            }
            let b = self
                .trainer
                .train_step(&self.dataset, &self.cfg, &self.loss_weights, rng)?;
            self.global_step += 1;
            out.push(b);
            if self.trainer.should_cache(&self.cfg) {
                self.cache_and_reset();
            }
        }
        self.publish();
        Ok(out)
    }

    /// Freezes the active parameters into a cached record, warm-starts a new
    /// trainer from the same weights, and enters the waiting period.
    pub fn cache_and_reset(&mut self) -> &LocalMapRecord<D> {
        let record = LocalMapRecord {
            params: self.trainer.params.clone(),
            region: self.trainer.region,
            created_step: self.global_step,
            final_loss: self.trainer.loss_ema.unwrap_or(0.0),
        };
        self.map.records.push(record);
        let mut fresh = ActiveTrainer::new(self.trainer.params.clone(), self.opt_cfg);
        fresh.waiting = true;
        self.trainer = fresh;
        self.map.records.last().expect("just pushed")
    }

    /// Publishes the current trainer parameters as the map's active snapshot.
    pub fn publish(&mut self) {
        self.map.active = Some(self.trainer.params.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Primitive;
    use crate::sim::{lidar_scan, LidarConfig, RobotPose, WorldSpec};
    use nalgebra::vector;
    use rand::SeedableRng;

    fn toy_world() -> WorldSpec<2> {
        WorldSpec::new(
            vec![Primitive::Ball {
                center: vector![2.0, 0.0],
                radius: 1.0,
            }],
            Bbox::new(vector![-4.0, -4.0], vector![4.0, 4.0]).unwrap(),
        )
        .unwrap()
    }

    fn small_mapper(seed: u64) -> OnlineMapper<2> {
        let mut cfg = MapperConfig::default();
        cfg.batch_size = 128;
        cfg.max_steps_per_map = 400;
        let net_cfg = NetConfig {
            frequencies: 16,
            hidden: 32,
            sigma_b: 0.8,
        };
        OnlineMapper::new(
            seed,
            cfg,
            net_cfg,
            OptimizerConfig::default(),
            LossWeights::default(),
            Bbox::new(vector![-4.0, -4.0], vector![4.0, 4.0]).unwrap(),
        )
    }

    #[test]
    fn fresh_trainer_does_not_cache() {
        let mapper = small_mapper(0);
        assert!(!mapper.trainer.should_cache(&mapper.cfg));
    }

    #[test]
    fn ema_patience_requires_consecutive_steps() {
        let mut mapper = small_mapper(1);
        mapper.trainer.loss_ema = Some(0.0);
        // Directly exercise the counter: 49 below-threshold steps then a
        // reset must not cache.
        mapper.trainer.below_count = 49;
        assert!(!mapper.trainer.should_cache(&mapper.cfg));
        mapper.trainer.below_count = 0;
        assert!(!mapper.trainer.should_cache(&mapper.cfg));
        mapper.trainer.below_count = 50;
        assert!(mapper.trainer.should_cache(&mapper.cfg));
    }

    #[test]
    fn forced_max_steps_caches() {
        let mut mapper = small_mapper(2);
        mapper.trainer.steps = mapper.cfg.max_steps_per_map;
        assert!(mapper.trainer.should_cache(&mapper.cfg));
    }

    #[test]
    fn training_reduces_loss_on_frozen_toy_dataset() {
        let world = toy_world();
        let mut mapper = small_mapper(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pose = RobotPose::new(vector![0.0, 0.0], 0.0);
        let cfg = LidarConfig {
            rays: 60,
            max_range: 6.0,
            ..LidarConfig::default()
        };
        let scan = lidar_scan(&world, &pose, &cfg, &mut rng);
        assert!(mapper.ingest_scan(&scan, None, &mut rng));
        assert!(!mapper.dataset.is_empty());
        mapper.cfg.max_steps_per_map = 0; // keep one map for this test
        let first = mapper.train(1, &mut rng).unwrap()[0].total;
        let mut last = first;
        for _ in 0..40 {
            if let Some(b) = mapper.train(50, &mut rng).unwrap().last() {
                last = b.total;
            }
            if mapper.trainer.loss_ema.unwrap() < 0.1 * first {
                break;
            }
        }
        let ema = mapper.trainer.loss_ema.unwrap();
        assert!(
            ema < 0.1 * first,
            "loss EMA {ema} did not drop below 10% of initial {first} (last {last})"
        );
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let world = toy_world();
        let mut mapper = small_mapper(4);
        mapper.opt_cfg.learning_rate = 0.0;
        mapper.opt_cfg.weight_decay = 0.0;
        mapper.trainer = ActiveTrainer::new(mapper.trainer.params.clone(), mapper.opt_cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pose = RobotPose::new(vector![0.0, 0.0], 0.0);
        let scan = lidar_scan(&world, &pose, &LidarConfig::default(), &mut rng);
        mapper.ingest_scan(&scan, None, &mut rng);
        let before = mapper.trainer.params.clone();
        mapper.train(5, &mut rng).unwrap();
        assert_eq!(before, mapper.trainer.params);
    }

    #[test]
    fn cache_freezes_bit_equal_params_and_increments_count() {
        let world = toy_world();
        let mut mapper = small_mapper(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pose = RobotPose::new(vector![0.0, 0.0], 0.0);
        let scan = lidar_scan(&world, &pose, &LidarConfig::default(), &mut rng);
        mapper.ingest_scan(&scan, None, &mut rng);
        mapper.train(3, &mut rng).unwrap();
        let frozen_src = mapper.trainer.params.clone();
        let count_before = mapper.map.records.len();
        mapper.cache_and_reset();
        assert_eq!(mapper.map.records.len(), count_before + 1);
        let record = mapper.map.records.last().unwrap();
        assert_eq!(record.params, frozen_src);
        // Warm start: the new trainer begins from the frozen weights and
        // waits for novel data.
        assert_eq!(mapper.trainer.params, frozen_src);
        assert_eq!(mapper.trainer.steps, 0);
        assert!(mapper.trainer.waiting);

        // Further training (after releasing the wait) leaves the frozen
        // record untouched.
        let probe = vector![1.0, 0.5];
        let frozen_out = record.params.forward_one(&probe);
        mapper.trainer.waiting = false;
        mapper.train(5, &mut rng).unwrap();
        assert_eq!(mapper.map.records.last().unwrap().params.forward_one(&probe), frozen_out);
    }

    #[test]
    fn waiting_blocks_training_until_novel_scan() {
        let world = toy_world();
        let mut mapper = small_mapper(6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pose = RobotPose::new(vector![0.0, 0.0], 0.0);
        let scan = lidar_scan(&world, &pose, &LidarConfig::default(), &mut rng);
        mapper.ingest_scan(&scan, None, &mut rng);
        mapper.train(3, &mut rng).unwrap();
        mapper.cache_and_reset();
        assert!(mapper.trainer.waiting);
        let steps = mapper.train(5, &mut rng).unwrap();
        assert!(steps.is_empty());
        // An empty scan never releases the wait.
        let empty = LidarScan::<2> {
            origin: vector![0.0, 0.0],
            directions: vec![],
            ranges: vec![],
            hit_mask: vec![],
            max_range: 8.0,
        };
        let prev = mapper.map.records.last().unwrap();
        assert!(!ActiveTrainer::waiting_over(prev, &empty, mapper.cfg.tau_wait));
    }

    #[test]
    fn waiting_over_when_scan_far_from_previous_map() {
        // A barely-trained map: scan points of the toy world sit far from
        // its zero level set, so the wait releases at tau = 0.3.
        let world = toy_world();
        let mut mapper = small_mapper(7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pose = RobotPose::new(vector![0.0, 0.0], 0.0);
        let scan = lidar_scan(&world, &pose, &LidarConfig::default(), &mut rng);
        mapper.ingest_scan(&scan, None, &mut rng);
        mapper.train(200, &mut rng).unwrap();
        mapper.cache_and_reset();
        let prev = mapper.map.records.last().unwrap();
        // Construct a synthetic scan 1 m beyond the learned wall.
        let far_hits: Vec<_> = (0..30).map(|i| vector![3.0, -1.0 + 0.07 * i as f64]).collect();
        let mut directions = Vec::new();
        let mut ranges = Vec::new();
        for h in &far_hits {
            let d = h - pose.position;
            ranges.push(d.norm());
            directions.push(d / d.norm());
        }
        let far_scan = LidarScan::<2> {
            origin: pose.position,
            directions,
            ranges,
            hit_mask: vec![true; far_hits.len()],
            max_range: 8.0,
        };
        assert!(ActiveTrainer::waiting_over(prev, &far_scan, mapper.cfg.tau_wait));
    }
}
