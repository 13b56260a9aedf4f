use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::Bbox;

use super::Scalar;

/// Architecture knobs. `frequencies` is the number of Fourier rows F, so the
/// encoder output has length 2F; `hidden` is the MLP width of both heads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub frequencies: usize,
    pub hidden: usize,
    /// Std-dev of the frozen Fourier matrix entries; the main
    /// detail-vs-smoothness knob given inputs normalized to [-1, 1].
    pub sigma_b: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            frequencies: 64,
            hidden: 128,
            sigma_b: 0.8,
        }
    }
}

/// One residual MLP head: three affine layers, the first layer's activation
/// skipped forward into the output layer's input.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams<T: Scalar> {
    /// (2F, H), applied as `x · w1`.
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    /// (H, H).
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    /// (H,), the scalar output row.
    pub w3: Array1<T>,
    pub b3: T,
}

impl<T: Scalar> HeadParams<T> {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w1: Array2::zeros((input, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, hidden)),
            b2: Array1::zeros(hidden),
            w3: Array1::zeros(hidden),
            b3: T::zero(),
        }
    }

    fn cast<U: Scalar>(&self) -> HeadParams<U> {
        HeadParams {
            w1: self.w1.mapv(|v| U::from_f64(v.into_f64())),
            b1: self.b1.mapv(|v| U::from_f64(v.into_f64())),
            w2: self.w2.mapv(|v| U::from_f64(v.into_f64())),
            b2: self.b2.mapv(|v| U::from_f64(v.into_f64())),
            w3: self.w3.mapv(|v| U::from_f64(v.into_f64())),
            b3: U::from_f64(self.b3.into_f64()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.w3.len() + 1
    }

    /// Visits every trainable parameter in the canonical order
    /// (w1 row-major, b1, w2, b2, w3, b3).
    pub fn for_each(&self, mut f: impl FnMut(T)) {
        self.w1.iter().for_each(|&v| f(v));
        self.b1.iter().for_each(|&v| f(v));
        self.w2.iter().for_each(|&v| f(v));
        self.b2.iter().for_each(|&v| f(v));
        self.w3.iter().for_each(|&v| f(v));
        f(self.b3);
    }

    /// Mutable visitation in the same canonical order.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut T)) {
        self.w1.iter_mut().for_each(&mut f);
        self.b1.iter_mut().for_each(&mut f);
        self.w2.iter_mut().for_each(&mut f);
        self.b2.iter_mut().for_each(&mut f);
        self.w3.iter_mut().for_each(&mut f);
        f(&mut self.b3);
    }
}

/// Gradient (or moment) tensors mirroring the trainable parameters.
pub type HeadTensors<T> = HeadParams<T>;

#[derive(Clone, Debug, PartialEq)]
pub struct NetGrads<T: Scalar> {
    pub sdf: HeadTensors<T>,
    pub conf: HeadTensors<T>,
}

impl<T: Scalar> NetGrads<T> {
    pub fn zeros_like<const D: usize>(params: &NetParams<T, D>) -> Self {
        let input = params.fourier.nrows() * 2;
        let hidden = params.sdf_head.b1.len();
        Self {
            sdf: HeadTensors::zeros(input, hidden),
            conf: HeadTensors::zeros(input, hidden),
        }
    }
}

/// Full parameter set of one local map network.
///
/// The Fourier matrix is frozen after initialization and excluded from the
/// trainable parameter vector. The input normalization (map world
/// coordinates onto [-1, 1] per axis) travels with the parameters so a
/// checkpoint reproduces the forward map exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct NetParams<T: Scalar, const D: usize> {
    /// (F, D), frozen.
    pub fourier: Array2<T>,
    pub sdf_head: HeadParams<T>,
    pub conf_head: HeadParams<T>,
    pub center: [f64; D],
    pub half: [f64; D],
}

impl<T: Scalar, const D: usize> NetParams<T, D> {
    /// Deterministic initialization: Fourier rows from N(0, sigma_b^2),
    /// head weights Kaiming-uniform, biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    /// All draws happen in f64 and are cast, so every scalar type sees the
    /// same numbers.
    pub fn init(seed: u64, cfg: &NetConfig, bounds: &Bbox<D>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = cfg.frequencies;
        let h = cfg.hidden;
        let input = 2 * f;

        let normal = Normal::new(0.0, cfg.sigma_b).expect("sigma_b must be positive");
        let fourier =
            Array2::from_shape_fn((f, D), |_| T::from_f64(normal.sample(&mut rng)));

        let mut head = |rng: &mut ChaCha8Rng| -> HeadParams<T> {
            let kaiming = |fan_in: usize, rng: &mut ChaCha8Rng| {
                let bound = (6.0 / fan_in as f64).sqrt();
                rng.gen_range(-bound..bound)
            };
            let bias = |fan_in: usize, rng: &mut ChaCha8Rng| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                rng.gen_range(-bound..bound)
            };
            let w1 = Array2::from_shape_fn((input, h), |_| T::from_f64(kaiming(input, rng)));
            let b1 = Array1::from_shape_fn(h, |_| T::from_f64(bias(input, rng)));
            let w2 = Array2::from_shape_fn((h, h), |_| T::from_f64(kaiming(h, rng)));
            let b2 = Array1::from_shape_fn(h, |_| T::from_f64(bias(h, rng)));
            let w3 = Array1::from_shape_fn(h, |_| T::from_f64(kaiming(h, rng)));
            let b3 = T::from_f64(bias(h, rng));
            HeadParams {
                w1,
                b1,
                w2,
                b2,
                w3,
                b3,
            }
        };
        let sdf_head = head(&mut rng);
        let conf_head = head(&mut rng);

        let center = std::array::from_fn(|i| (bounds.min[i] + bounds.max[i]) * 0.5);
        let half = std::array::from_fn(|i| (bounds.max[i] - bounds.min[i]) * 0.5);
        Self {
            fourier,
            sdf_head,
            conf_head,
            center,
            half,
        }
    }

    pub fn frequencies(&self) -> usize {
        self.fourier.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.sdf_head.b1.len()
    }

    /// Number of trainable parameters (the frozen Fourier matrix excluded).
    pub fn trainable_count(&self) -> usize {
        self.sdf_head.param_count() + self.conf_head.param_count()
    }

    /// Largest |theta| over the trainable parameters, with its canonical flat
    /// index (sdf head first; ties resolve to the lowest index).
    pub fn linf_norm(&self) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0;
        let mut idx = 0;
        let mut scan = |head: &HeadParams<T>, best: &mut f64, best_idx: &mut usize, idx: &mut usize| {
            head.for_each(|v| {
                let mag = v.into_f64().abs();
                if mag > *best {
                    *best = mag;
                    *best_idx = *idx;
                }
                *idx += 1;
            });
        };
        scan(&self.sdf_head, &mut best, &mut best_idx, &mut idx);
        scan(&self.conf_head, &mut best, &mut best_idx, &mut idx);
        (best, best_idx)
    }

    pub fn cast<U: Scalar>(&self) -> NetParams<U, D> {
        NetParams {
            fourier: self.fourier.mapv(|v| U::from_f64(v.into_f64())),
            sdf_head: self.sdf_head.cast(),
            conf_head: self.conf_head.cast(),
            center: self.center,
            half: self.half,
        }
    }
}
