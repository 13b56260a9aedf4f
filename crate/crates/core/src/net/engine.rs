use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis, Zip};

use crate::geom::Point;

use super::activation::Activation;
use super::loss::{huber, huber_deriv, LossBreakdown, LossWeights};
use super::params::{HeadParams, HeadTensors, NetGrads, NetParams};
use super::{NetError, Scalar};

/// Value and spatial gradient of a head output at one query point, in world
/// units (meters and meters per meter).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualEval<const D: usize> {
    pub value: f64,
    pub grad: Point<D>,
}

/// Encoder output with optional forward-mode tangent channels, one per world
/// axis.
struct DualMat<T> {
    val: Array2<T>,
    tan: Vec<Array2<T>>,
}

/// Intermediates of one head forward pass, kept for the reverse sweep.
struct HeadTrace<T> {
    d1: Array2<T>,
    dd1: Array2<T>,
    h1: Array2<T>,
    h1_tan: Vec<Array2<T>>,
    a2_tan: Vec<Array2<T>>,
    d2: Array2<T>,
    dd2: Array2<T>,
    h2: Array2<T>,
    h2_tan: Vec<Array2<T>>,
    out: Array1<T>,
    out_tan: Vec<Array1<T>>,
    // Layer-1 pre-activation tangents, needed by the second-derivative term.
    a1_tan: Vec<Array2<T>>,
}

impl<T: Scalar, const D: usize> NetParams<T, D> {
    fn normalized(&self, pts: &[Point<D>]) -> Array2<T> {
        let mut x = Array2::zeros((pts.len(), D));
        for (i, p) in pts.iter().enumerate() {
            for k in 0..D {
                x[[i, k]] = T::from_f64((p[k] - self.center[k]) / self.half[k]);
            }
        }
        x
    }

    /// Fourier features `[sin(2π B p̂); cos(2π B p̂)]` of one point.
    pub fn fourier_features(&self, p: &Point<D>) -> Vec<f64> {
        let z = self.encode(&self.normalized(&[*p]), false);
        z.val.row(0).iter().map(|v| v.into_f64()).collect()
    }

    fn encode(&self, x_norm: &Array2<T>, tangents: bool) -> DualMat<T> {
        let n = x_norm.nrows();
        let f = self.fourier.nrows();
        let two_pi = T::from_f64(std::f64::consts::TAU);

        // Angles (n, F) = 2π · p̂ Bᵀ.
        let mut angles = Array2::zeros((n, f));
        general_mat_mul(two_pi, x_norm, &self.fourier.t(), T::zero(), &mut angles);

        let sin = angles.mapv(|a| a.sin());
        let cos = angles.mapv(|a| a.cos());
        let mut val = Array2::zeros((n, 2 * f));
        val.slice_mut(ndarray::s![.., ..f]).assign(&sin);
        val.slice_mut(ndarray::s![.., f..]).assign(&cos);

        let mut tan = Vec::new();
        if tangents {
            for k in 0..D {
                // d(angle)/d(world p_k) is the constant row 2π B[:,k] / half_k.
                let scale = T::from_f64(1.0 / self.half[k]);
                let coeff: Array1<T> =
                    self.fourier.column(k).mapv(|b| b * two_pi * scale);
                let mut zt = Array2::zeros((n, 2 * f));
                {
                    let mut left = zt.slice_mut(ndarray::s![.., ..f]);
                    left.assign(&cos);
                    left *= &coeff;
                }
                {
                    let mut right = zt.slice_mut(ndarray::s![.., f..]);
                    right.assign(&sin);
                    right *= &coeff;
                    right.mapv_inplace(|v| -v);
                }
                tan.push(zt);
            }
        }
        DualMat { val, tan }
    }

    fn head_forward(&self, head: &HeadParams<T>, act: Activation, z: &DualMat<T>) -> HeadTrace<T> {
        let tangents = !z.tan.is_empty();

        let mut a1 = z.val.dot(&head.w1);
        a1 += &head.b1;
        let (h1, d1, dd1) = act_all(act, &a1);
        let a1_tan: Vec<Array2<T>> = z.tan.iter().map(|zt| zt.dot(&head.w1)).collect();
        let h1_tan: Vec<Array2<T>> = a1_tan.iter().map(|at| at * &d1).collect();

        let mut a2 = h1.dot(&head.w2);
        a2 += &head.b2;
        let (h2, d2, dd2) = act_all(act, &a2);
        let a2_tan: Vec<Array2<T>> = h1_tan.iter().map(|ht| ht.dot(&head.w2)).collect();
        let h2_tan: Vec<Array2<T>> = a2_tan.iter().map(|at| at * &d2).collect();

        // Residual skip: layer-1 activations feed the output layer directly.
        let r = &h2 + &h1;
        let mut out = r.dot(&head.w3);
        out += head.b3;
        let out_tan: Vec<Array1<T>> = if tangents {
            (0..D).map(|k| (&h2_tan[k] + &h1_tan[k]).dot(&head.w3)).collect()
        } else {
            Vec::new()
        };

        HeadTrace {
            d1,
            dd1,
            h1,
            h1_tan,
            a2_tan,
            d2,
            dd2,
            h2,
            h2_tan,
            out,
            out_tan,
            a1_tan,
        }
    }

    /// Reverse sweep through one head, over both value and tangent channels.
    /// Returns gradients with respect to the head's trainable parameters.
    fn head_reverse(
        &self,
        head: &HeadParams<T>,
        z: &DualMat<T>,
        trace: &HeadTrace<T>,
        adj_out: &Array1<T>,
        adj_out_tan: &[Array1<T>],
    ) -> HeadTensors<T> {
        let n = adj_out.len();
        let h = head.b1.len();
        let channels = adj_out_tan.len();

        let r = &trace.h2 + &trace.h1;
        let mut grad_w3 = r.t().dot(adj_out);
        for k in 0..channels {
            let r_tan = &trace.h2_tan[k] + &trace.h1_tan[k];
            grad_w3 += &r_tan.t().dot(&adj_out_tan[k]);
        }
        let grad_b3 = adj_out.sum();

        // out = (h2 + h1) · w3 + b3, so both h2 and h1 receive the same
        // outer-product adjoint.
        let w3_row = head.w3.view().insert_axis(Axis(0));
        let adj_r_val = adj_out.view().insert_axis(Axis(1)).to_owned() * &w3_row;
        let adj_r_tan: Vec<Array2<T>> = adj_out_tan
            .iter()
            .map(|a| a.view().insert_axis(Axis(1)).to_owned() * &w3_row)
            .collect();

        // Layer 2 activation backward: the tangent channels couple into the
        // value adjoint through the second derivative.
        let mut adj_a2_val: Array2<T> = &adj_r_val * &trace.d2;
        if channels > 0 {
            let mut mixed = Array2::zeros((n, h));
            for k in 0..channels {
                mixed += &(&trace.a2_tan[k] * &adj_r_tan[k]);
            }
            adj_a2_val += &(&mixed * &trace.dd2);
        }
        let adj_a2_tan: Vec<Array2<T>> =
            (0..channels).map(|k| &adj_r_tan[k] * &trace.d2).collect();

        let mut grad_w2 = Array2::zeros((h, h));
        general_mat_mul(T::one(), &trace.h1.t(), &adj_a2_val, T::zero(), &mut grad_w2);
        for k in 0..channels {
            general_mat_mul(T::one(), &trace.h1_tan[k].t(), &adj_a2_tan[k], T::one(), &mut grad_w2);
        }
        let grad_b2 = adj_a2_val.sum_axis(Axis(0));

        // h1 adjoint: residual skip plus the layer-2 path.
        let mut adj_h1_val = adj_r_val;
        general_mat_mul(T::one(), &adj_a2_val, &head.w2.t(), T::one(), &mut adj_h1_val);
        let mut adj_h1_tan = adj_r_tan;
        for k in 0..channels {
            general_mat_mul(T::one(), &adj_a2_tan[k], &head.w2.t(), T::one(), &mut adj_h1_tan[k]);
        }

        let mut adj_a1_val: Array2<T> = &adj_h1_val * &trace.d1;
        if channels > 0 {
            let mut mixed = Array2::zeros((n, h));
            for k in 0..channels {
                mixed += &(&trace.a1_tan[k] * &adj_h1_tan[k]);
            }
            adj_a1_val += &(&mixed * &trace.dd1);
        }
        let adj_a1_tan: Vec<Array2<T>> =
            (0..channels).map(|k| &adj_h1_tan[k] * &trace.d1).collect();

        let input = head.w1.nrows();
        let mut grad_w1 = Array2::zeros((input, h));
        general_mat_mul(T::one(), &z.val.t(), &adj_a1_val, T::zero(), &mut grad_w1);
        for k in 0..channels {
            general_mat_mul(T::one(), &z.tan[k].t(), &adj_a1_tan[k], T::one(), &mut grad_w1);
        }
        let grad_b1 = adj_a1_val.sum_axis(Axis(0));

        HeadTensors {
            w1: grad_w1,
            b1: grad_b1,
            w2: grad_w2,
            b2: grad_b2,
            w3: grad_w3,
            b3: grad_b3,
        }
    }

    /// Batched plain forward: signed distance and raw confidence per point.
    ///
    /// The confidence is the head's affine output; clamping to [1e-7, 1]
    /// happens at map query time, not here, so training sees gradients.
    pub fn forward_batch(&self, pts: &[Point<D>]) -> (Vec<f64>, Vec<f64>) {
        let z = self.encode(&self.normalized(pts), false);
        let s = self.head_forward(&self.sdf_head, Activation::Tanhshrink, &z);
        let c = self.head_forward(&self.conf_head, Activation::Tanh, &z);
        (
            s.out.iter().map(|v| v.into_f64()).collect(),
            c.out.iter().map(|v| v.into_f64()).collect(),
        )
    }

    pub fn forward_one(&self, p: &Point<D>) -> (f64, f64) {
        let (s, c) = self.forward_batch(std::slice::from_ref(p));
        (s[0], c[0])
    }

    /// Signed distance and its exact spatial gradient (forward-mode duals).
    pub fn forward_with_input_grad(&self, p: &Point<D>) -> DualEval<D> {
        let z = self.encode(&self.normalized(std::slice::from_ref(p)), true);
        let t = self.head_forward(&self.sdf_head, Activation::Tanhshrink, &z);
        let mut grad = Point::<D>::zeros();
        for k in 0..D {
            grad[k] = t.out_tan[k][0].into_f64();
        }
        DualEval {
            value: t.out[0].into_f64(),
            grad,
        }
    }

    /// Batched dual evaluation of both heads; the confidence gradient is
    /// needed when differentiating through softmax fusion.
    pub fn forward_dual_batch(&self, pts: &[Point<D>]) -> (Vec<DualEval<D>>, Vec<DualEval<D>>) {
        let z = self.encode(&self.normalized(pts), true);
        let collect = |t: &HeadTrace<T>| {
            (0..pts.len())
                .map(|i| {
                    let mut grad = Point::<D>::zeros();
                    for k in 0..D {
                        grad[k] = t.out_tan[k][i].into_f64();
                    }
                    DualEval {
                        value: t.out[i].into_f64(),
                        grad,
                    }
                })
                .collect::<Vec<_>>()
        };
        let s = self.head_forward(&self.sdf_head, Activation::Tanhshrink, &z);
        let c = self.head_forward(&self.conf_head, Activation::Tanh, &z);
        (collect(&s), collect(&c))
    }

    /// Mean four-term loss over a labeled batch and its parameter gradients.
    ///
    /// The Eikonal term differentiates the forward-mode input gradient, so
    /// the reverse sweep runs over both value and tangent channels
    /// (reverse-over-forward). The L-infinity regularizer contributes its
    /// full (sub)gradient to the single maximum-magnitude parameter, ties
    /// resolved to the lowest canonical index.
    pub fn loss_and_param_grads(
        &self,
        pts: &[Point<D>],
        sdf_labels: &[f64],
        conf_labels: &[f64],
        weights: &LossWeights,
    ) -> Result<(LossBreakdown, NetGrads<T>), NetError> {
        let n = pts.len();
        if n == 0 {
            return Err(NetError::EmptyBatch);
        }
        if sdf_labels.len() != n || conf_labels.len() != n {
            return Err(NetError::ShapeMismatch(format!(
                "batch {n} with {} sdf and {} conf labels",
                sdf_labels.len(),
                conf_labels.len()
            )));
        }

        let z = self.encode(&self.normalized(pts), true);
        let z_plain = DualMat {
            val: z.val.clone(),
            tan: Vec::new(),
        };
        let sdf_trace = self.head_forward(&self.sdf_head, Activation::Tanhshrink, &z);
        let conf_trace = self.head_forward(&self.conf_head, Activation::Tanh, &z_plain);

        let inv_n = 1.0 / n as f64;
        let mut sum_hs = 0.0;
        let mut sum_hc = 0.0;
        let mut sum_e = 0.0;
        let mut adj_s = Array1::zeros(n);
        let mut adj_c = Array1::zeros(n);
        let mut adj_s_tan: Vec<Array1<T>> = (0..D).map(|_| Array1::zeros(n)).collect();

        for i in 0..n {
            let s = sdf_trace.out[i].into_f64();
            let c = conf_trace.out[i].into_f64();
            let rs = s - sdf_labels[i];
            let rc = c - conf_labels[i];
            sum_hs += huber(rs, weights.huber_delta);
            sum_hc += huber(rc, weights.huber_delta);
            adj_s[i] = T::from_f64(weights.huber_sdf * huber_deriv(rs, weights.huber_delta) * inv_n);
            adj_c[i] =
                T::from_f64(weights.huber_conf * huber_deriv(rc, weights.huber_delta) * inv_n);

            let mut norm2 = 0.0;
            for k in 0..D {
                let g = sdf_trace.out_tan[k][i].into_f64();
                norm2 += g * g;
            }
            let norm = norm2.sqrt();
            sum_e += (norm - 1.0) * (norm - 1.0);
            if norm > 1e-12 {
                let scale = weights.eikonal * 2.0 * (norm - 1.0) / norm * inv_n;
                for k in 0..D {
                    adj_s_tan[k][i] =
                        T::from_f64(scale * sdf_trace.out_tan[k][i].into_f64());
                }
            }
        }

        let (linf, linf_idx) = self.linf_norm();
        let breakdown = LossBreakdown {
            huber_sdf: sum_hs * inv_n,
            huber_conf: sum_hc * inv_n,
            eikonal: sum_e * inv_n,
            linf,
            total: weights.huber_sdf * sum_hs * inv_n
                + weights.huber_conf * sum_hc * inv_n
                + weights.eikonal * sum_e * inv_n
                + weights.linf * linf,
        };
        if !breakdown.total.is_finite() {
            return Err(NetError::NonFinite("loss"));
        }

        let sdf_grads = self.head_reverse(&self.sdf_head, &z, &sdf_trace, &adj_s, &adj_s_tan);
        let conf_grads = self.head_reverse(&self.conf_head, &z_plain, &conf_trace, &adj_c, &[]);
        let mut grads = NetGrads {
            sdf: sdf_grads,
            conf: conf_grads,
        };
        add_linf_subgradient(self, &mut grads, weights.linf, linf_idx);

        Ok((breakdown, grads))
    }
}

/// Adds `weight * sign(theta_max)` to the gradient coordinate holding the
/// maximum-magnitude parameter.
fn add_linf_subgradient<T: Scalar, const D: usize>(
    params: &NetParams<T, D>,
    grads: &mut NetGrads<T>,
    weight: f64,
    flat_idx: usize,
) {
    let sdf_count = params.sdf_head.param_count();
    let (head_params, head_grads, idx) = if flat_idx < sdf_count {
        (&params.sdf_head, &mut grads.sdf, flat_idx)
    } else {
        (&params.conf_head, &mut grads.conf, flat_idx - sdf_count)
    };
    let mut sign = T::zero();
    let mut scan = 0usize;
    head_params.for_each(|v| {
        if scan == idx {
            sign = if v < T::zero() { -T::one() } else { T::one() };
        }
        scan += 1;
    });
    let w = T::from_f64(weight) * sign;
    let mut scan = 0usize;
    head_grads.for_each_mut(|g| {
        if scan == idx {
            *g = *g + w;
        }
        scan += 1;
    });
}

fn act_all<T: Scalar>(act: Activation, a: &Array2<T>) -> (Array2<T>, Array2<T>, Array2<T>) {
    let mut h = Array2::zeros(a.dim());
    let mut d = Array2::zeros(a.dim());
    let mut dd = Array2::zeros(a.dim());
    Zip::from(&mut h)
        .and(&mut d)
        .and(&mut dd)
        .and(a)
        .for_each(|h, d, dd, &x| {
            let (v, dv, ddv) = act.eval_all(x);
            *h = v;
            *d = dv;
            *dd = ddv;
        });
    (h, d, dd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Bbox;
    use crate::net::NetConfig;
    use nalgebra::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bounds() -> Bbox<2> {
        Bbox::new(vector![-2.0, -2.0], vector![2.0, 2.0]).unwrap()
    }

    fn small_cfg() -> NetConfig {
        NetConfig {
            frequencies: 6,
            hidden: 10,
            sigma_b: 0.8,
        }
    }

    #[test]
    fn fourier_features_at_center_are_sin_zero_cos_one() {
        let p: NetParams<f64, 2> = NetParams::init(1, &small_cfg(), &bounds());
        let z = p.fourier_features(&vector![0.0, 0.0]);
        let f = p.frequencies();
        assert_eq!(z.len(), 2 * f);
        for &v in &z[..f] {
            assert_eq!(v, 0.0);
        }
        for &v in &z[f..] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn fourier_features_are_bounded() {
        let p: NetParams<f64, 2> = NetParams::init(2, &small_cfg(), &bounds());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let q = vector![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            for v in p.fourier_features(&q) {
                assert!((-1.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn integer_frequency_row_is_periodic() {
        // One Fourier row [1, 0]: features repeat with period 1 in normalized
        // x, i.e. half_x meters in world coordinates.
        let mut p: NetParams<f64, 2> = NetParams::init(3, &small_cfg(), &bounds());
        p.fourier = ndarray::arr2(&[[1.0, 0.0]]);
        let period = p.half[0];
        let a = p.fourier_features(&vector![0.3, 0.7]);
        let b = p.fourier_features(&vector![0.3 + period, 0.7]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_head_outputs_zero() {
        let mut p: NetParams<f64, 2> = NetParams::init(4, &small_cfg(), &bounds());
        for head in [&mut p.sdf_head, &mut p.conf_head] {
            head.for_each_mut(|v| *v = 0.0);
        }
        let (s, c) = p.forward_one(&vector![0.7, -0.4]);
        assert_eq!(s, 0.0);
        assert_eq!(c, 0.0);
        let g = p.forward_with_input_grad(&vector![0.7, -0.4]);
        assert_eq!(g.grad, vector![0.0, 0.0]);
    }

    #[test]
    fn batch_forward_equals_single_calls() {
        let p: NetParams<f64, 2> = NetParams::init(5, &small_cfg(), &bounds());
        let pts: Vec<_> = (0..7)
            .map(|i| vector![0.3 * i as f64 - 1.0, 0.2 * i as f64 - 0.5])
            .collect();
        let (s_batch, c_batch) = p.forward_batch(&pts);
        for (i, q) in pts.iter().enumerate() {
            let (s, c) = p.forward_one(q);
            assert!((s - s_batch[i]).abs() < 1e-14);
            assert!((c - c_batch[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn f32_forward_tracks_f64_reference() {
        let cfg = NetConfig::default();
        let p64: NetParams<f64, 2> = NetParams::init(6, &cfg, &bounds());
        let p32 = p64.cast::<f32>();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let q = vector![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let (s64, c64) = p64.forward_one(&q);
            let (s32, c32) = p32.forward_one(&q);
            // Relative on the unit scale of the outputs; freshly initialized
            // nets emit values near zero where a pure ratio is meaningless.
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            assert!(rel(s64, s32) < 1e-4, "{s64} vs {s32}");
            assert!(rel(c64, c32) < 1e-4, "{c64} vs {c32}");
        }
    }

    #[test]
    fn input_gradient_matches_central_differences() {
        let p: NetParams<f64, 2> = NetParams::init(7, &NetConfig::default(), &bounds());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for _ in 0..100 {
            let q = vector![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let dual = p.forward_with_input_grad(&q);
            for k in 0..2 {
                let mut qa = q;
                let mut qb = q;
                qa[k] -= h;
                qb[k] += h;
                let fd = (p.forward_one(&qb).0 - p.forward_one(&qa).0) / (2.0 * h);
                let rel = (dual.grad[k] - fd).abs() / (1e-6 + fd.abs().max(dual.grad[k].abs()));
                assert!(rel < 1e-4, "axis {k}: {} vs {fd}", dual.grad[k]);
            }
        }
    }

    #[test]
    fn residual_skip_dominates_when_inner_layers_vanish() {
        let p: NetParams<f64, 2> = NetParams::init(8, &small_cfg(), &bounds());
        let q = vector![0.4, -0.9];

        // Knock out the layer-2 block entirely: the head must reduce to the
        // skip path w3 · act(w1 z + b1) + b3, computed here independently.
        let mut skip_only = p.clone();
        skip_only.sdf_head.w2.fill(0.0);
        skip_only.sdf_head.b2.fill(0.0);
        let z = p.fourier_features(&q);
        let head = &p.sdf_head;
        let mut expected = head.b3;
        for j in 0..head.b1.len() {
            let mut pre = head.b1[j];
            for (i, &zi) in z.iter().enumerate() {
                pre += head.w1[[i, j]] * zi;
            }
            expected += head.w3[j] * Activation::Tanhshrink.value(pre);
        }
        let (s, _) = skip_only.forward_one(&q);
        assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");

        // Zeroing the layer-2 and layer-3 weight matrices as well leaves b3,
        // which is also what the skip path evaluates to under w3 = 0.
        let mut dead = skip_only.clone();
        dead.sdf_head.w3.fill(0.0);
        let (s_dead, _) = dead.forward_one(&q);
        assert!((s_dead - p.sdf_head.b3).abs() < 1e-15);
    }

    #[test]
    fn perfect_labels_leave_only_eikonal_and_regularizer() {
        let p: NetParams<f64, 2> = NetParams::init(9, &small_cfg(), &bounds());
        let pts: Vec<_> = (0..16)
            .map(|i| vector![-1.5 + 0.2 * i as f64, 0.4])
            .collect();
        let (s, c) = p.forward_batch(&pts);
        let w = LossWeights::default();
        let (loss, _) = p.loss_and_param_grads(&pts, &s, &c, &w).unwrap();
        assert!(loss.huber_sdf == 0.0 && loss.huber_conf == 0.0);
        let expected = w.eikonal * loss.eikonal + w.linf * loss.linf;
        assert!((loss.total - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let p: NetParams<f64, 2> = NetParams::init(10, &small_cfg(), &bounds());
        assert!(matches!(
            p.loss_and_param_grads(&[], &[], &[], &LossWeights::default()),
            Err(NetError::EmptyBatch)
        ));
    }

    /// Flattens a gradient struct in the canonical parameter order.
    fn flatten(grads: &NetGrads<f64>) -> Vec<f64> {
        let mut out = Vec::new();
        grads.sdf.for_each(|v| out.push(v));
        grads.conf.for_each(|v| out.push(v));
        out
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        let cfg = NetConfig {
            frequencies: 4,
            hidden: 6,
            sigma_b: 0.9,
        };
        let p: NetParams<f64, 2> = NetParams::init(11, &cfg, &bounds());
        let pts = vec![vector![0.35, -0.6], vector![-1.2, 0.8]];
        let s_labels = vec![0.2, -0.1];
        let c_labels = vec![0.9, 0.4];
        let w = LossWeights::default();

        let (_, grads) = p.loss_and_param_grads(&pts, &s_labels, &c_labels, &w).unwrap();
        let flat = flatten(&grads);

        let h = 1e-6;
        let mut idx = 0;
        let mut perturbed = |i: usize, delta: f64| -> f64 {
            let mut q = p.clone();
            let mut scan = 0usize;
            let sdf_count = q.sdf_head.param_count();
            if i < sdf_count {
                q.sdf_head.for_each_mut(|v| {
                    if scan == i {
                        *v += delta;
                    }
                    scan += 1;
                });
            } else {
                q.conf_head.for_each_mut(|v| {
                    if scan == i - sdf_count {
                        *v += delta;
                    }
                    scan += 1;
                });
            }
            let (loss, _) = q.loss_and_param_grads(&pts, &s_labels, &c_labels, &w).unwrap();
            loss.total
        };
        let mut worst: f64 = 0.0;
        for i in 0..flat.len() {
            let fd = (perturbed(i, h) - perturbed(i, -h)) / (2.0 * h);
            let rel = (flat[i] - fd).abs() / (1e-4 + fd.abs().max(flat[i].abs()));
            worst = worst.max(rel);
            assert!(rel <= 1e-4, "param {i}: grad {} vs fd {fd} (rel {rel})", flat[i]);
            idx += 1;
        }
        assert_eq!(idx, p.trainable_count());
        assert!(worst <= 1e-4);
    }
}
