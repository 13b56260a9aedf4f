use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::params::{HeadParams, HeadTensors, NetGrads, NetParams};
use super::{NetError, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    /// Decoupled weight decay, applied directly to the parameters.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// AMSGrad state: first and second moments plus the running elementwise
/// maximum of the second moment, which never decreases.
#[derive(Clone, Debug)]
pub struct AmsGrad<T: Scalar> {
    pub cfg: OptimizerConfig,
    pub step_count: u64,
    m: NetGrads<T>,
    v: NetGrads<T>,
    vhat: NetGrads<T>,
}

impl<T: Scalar> AmsGrad<T> {
    pub fn new<const D: usize>(cfg: OptimizerConfig, params: &NetParams<T, D>) -> Self {
        Self {
            cfg,
            step_count: 0,
            m: NetGrads::zeros_like(params),
            v: NetGrads::zeros_like(params),
            vhat: NetGrads::zeros_like(params),
        }
    }

    /// One AMSGrad update with decoupled weight decay.
    pub fn step<const D: usize>(
        &mut self,
        params: &mut NetParams<T, D>,
        grads: &NetGrads<T>,
    ) -> Result<(), NetError> {
        if params.sdf_head.w1.dim() != grads.sdf.w1.dim()
            || params.conf_head.w1.dim() != grads.conf.w1.dim()
        {
            return Err(NetError::ShapeMismatch(
                "gradient tensors do not match parameter shapes".into(),
            ));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = T::from_f64(1.0 - self.cfg.beta1.powi(t));
        let bc2 = T::from_f64(1.0 - self.cfg.beta2.powi(t));
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let lr = T::from_f64(self.cfg.learning_rate);
        let wd = T::from_f64(self.cfg.weight_decay);
        let eps = T::from_f64(self.cfg.eps);
        let one = T::one();

        let mut update_head = |p: &mut HeadParams<T>,
                               g: &HeadTensors<T>,
                               m: &mut HeadTensors<T>,
                               v: &mut HeadTensors<T>,
                               vhat: &mut HeadTensors<T>| {
            let scalar_update = |p: &mut T, g: T, m: &mut T, v: &mut T, vh: &mut T| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *vh = if *v > *vh { *v } else { *vh };
                let mhat = *m / bc1;
                let vcorr = *vh / bc2;
                *p = *p - lr * wd * *p - lr * mhat / (vcorr.sqrt() + eps);
            };
            macro_rules! tensor {
                ($field:ident) => {
                    Zip::from(&mut p.$field)
                        .and(&g.$field)
                        .and(&mut m.$field)
                        .and(&mut v.$field)
                        .and(&mut vhat.$field)
                        .for_each(|p, &g, m, v, vh| scalar_update(p, g, m, v, vh));
                };
            }
            tensor!(w1);
            tensor!(b1);
            tensor!(w2);
            tensor!(b2);
            tensor!(w3);
            scalar_update(&mut p.b3, g.b3, &mut m.b3, &mut v.b3, &mut vhat.b3);
        };

        update_head(
            &mut params.sdf_head,
            &grads.sdf,
            &mut self.m.sdf,
            &mut self.v.sdf,
            &mut self.vhat.sdf,
        );
        update_head(
            &mut params.conf_head,
            &grads.conf,
            &mut self.m.conf,
            &mut self.v.conf,
            &mut self.vhat.conf,
        );
        Ok(())
    }

    /// Largest second-moment maximum, for monotonicity checks.
    pub fn vhat_max(&self) -> f64 {
        let mut max = f64::NEG_INFINITY;
        self.vhat.sdf.for_each(|v| max = max.max(v.into_f64()));
        self.vhat.conf.for_each(|v| max = max.max(v.into_f64()));
        max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Bbox;
    use crate::net::{NetConfig, NetParams};
    use nalgebra::vector;

    fn setup() -> (NetParams<f64, 2>, AmsGrad<f64>) {
        let cfg = NetConfig {
            frequencies: 3,
            hidden: 4,
            sigma_b: 0.5,
        };
        let bounds = Bbox::new(vector![-1.0, -1.0], vector![1.0, 1.0]).unwrap();
        let params: NetParams<f64, 2> = NetParams::init(0, &cfg, &bounds);
        let opt = AmsGrad::new(OptimizerConfig::default(), &params);
        (params, opt)
    }

    #[test]
    fn zero_gradient_without_decay_leaves_params_unchanged() {
        let (mut params, _) = setup();
        let mut opt = AmsGrad::new(
            OptimizerConfig {
                weight_decay: 0.0,
                ..OptimizerConfig::default()
            },
            &params,
        );
        let before = params.clone();
        let grads = NetGrads::zeros_like(&params);
        for _ in 0..5 {
            opt.step(&mut params, &grads).unwrap();
        }
        assert_eq!(params, before);
    }

    #[test]
    fn constant_gradient_step_size_approaches_learning_rate() {
        // With a constant gradient g, bias-corrected m/sqrt(vhat) tends to 1,
        // so each step moves the parameter by about lr.
        let (mut params, _) = setup();
        let mut opt = AmsGrad::new(
            OptimizerConfig {
                weight_decay: 0.0,
                ..OptimizerConfig::default()
            },
            &params,
        );
        let mut grads = NetGrads::zeros_like(&params);
        grads.sdf.w1[[0, 0]] = 0.37;
        let mut prev = params.sdf_head.w1[[0, 0]];
        for _ in 0..500 {
            opt.step(&mut params, &grads).unwrap();
            prev = params.sdf_head.w1[[0, 0]];
        }
        let before_last = prev;
        opt.step(&mut params, &grads).unwrap();
        let step = (params.sdf_head.w1[[0, 0]] - before_last).abs();
        assert!(
            (step - opt.cfg.learning_rate).abs() < 0.05 * opt.cfg.learning_rate,
            "step {step}"
        );
    }

    #[test]
    fn vhat_never_decreases() {
        let (mut params, mut opt) = setup();
        let mut grads = NetGrads::zeros_like(&params);
        let mut last = f64::NEG_INFINITY;
        for k in 0..50 {
            // Oscillating gradient magnitude tries to pull v back down.
            let mag = if k % 2 == 0 { 1.0 } else { 1e-3 };
            grads.sdf.w1[[0, 0]] = mag;
            opt.step(&mut params, &grads).unwrap();
            let now = opt.vhat_max();
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn decoupled_decay_shrinks_parameters() {
        let (mut params, _) = setup();
        let mut opt = AmsGrad::new(
            OptimizerConfig {
                weight_decay: 0.1,
                ..OptimizerConfig::default()
            },
            &params,
        );
        let grads = NetGrads::zeros_like(&params);
        let before = params.sdf_head.w1[[0, 0]];
        opt.step(&mut params, &grads).unwrap();
        let after = params.sdf_head.w1[[0, 0]];
        assert!((after - before * (1.0 - 0.01 * 0.1)).abs() < 1e-12);
    }
}
