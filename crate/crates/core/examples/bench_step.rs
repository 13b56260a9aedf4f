use nalgebra::vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdfmap::geom::Bbox;
use sdfmap::net::{AmsGrad, LossWeights, NetConfig, NetParams, OptimizerConfig};

fn main() {
    let bounds = Bbox::new(vector![-4.0, -3.0], vector![4.0, 3.0]).unwrap();
    let mut params: NetParams<f32, 2> = NetParams::init(0, &NetConfig::default(), &bounds);
    let mut opt = AmsGrad::new(OptimizerConfig::default(), &params);
    let w = LossWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<_> = (0..1000)
        .map(|_| vector![rng.gen_range(-4.0..4.0), rng.gen_range(-3.0..3.0)])
        .collect();
    let s: Vec<f64> = pts.iter().map(|p| p.norm() - 1.0).collect();
    let c: Vec<f64> = vec![1.0; pts.len()];
    let t0 = std::time::Instant::now();
    let steps = 100;
    for _ in 0..steps {
        let (_, grads) = params.loss_and_param_grads(&pts, &s, &c, &w).unwrap();
        opt.step(&mut params, &grads).unwrap();
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("{:.2} ms/step ({:.0} steps/s)", dt / steps as f64 * 1e3, steps as f64 / dt);
}
