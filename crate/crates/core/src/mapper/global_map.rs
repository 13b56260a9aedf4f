use crate::geom::{Bbox, Point, SdfField};
use crate::net::{NetParams, Scalar};

use super::MapperError;

/// Confidence output clamp applied at query time.
pub const CONFIDENCE_FLOOR: f64 = 1e-7;
pub const CONFIDENCE_CEIL: f64 = 1.0;

fn clamp_conf(raw: f64) -> f64 {
    raw.clamp(CONFIDENCE_FLOOR, CONFIDENCE_CEIL)
}

/// Hard-argmax fusion over a set of networks: the signed distance of the
/// most confident map, ties resolved to the most recent (last) entry.
pub fn fused_argmax<'a, T: Scalar + 'a, const D: usize>(
    nets: impl Iterator<Item = &'a NetParams<T, D>>,
    p: &Point<D>,
) -> Option<(f64, f64, usize)> {
    let mut best: Option<(f64, f64, usize)> = None;
    for (i, net) in nets.enumerate() {
        let (s, c_raw) = net.forward_one(p);
        let c = clamp_conf(c_raw);
        // >= so later (more recent) maps win exact ties.
        if best.map_or(true, |(_, bc, _)| c >= bc) {
            best = Some((s, c, i));
        }
    }
    best
}

/// Softmax fusion `sum s_i e^(alpha c_i) / sum e^(alpha c_i)` with max shift.
pub fn fused_smooth<'a, T: Scalar + 'a, const D: usize>(
    nets: impl Iterator<Item = &'a NetParams<T, D>>,
    alpha: f64,
    p: &Point<D>,
) -> Option<f64> {
    let mut vals = Vec::new();
    let mut confs = Vec::new();
    for net in nets {
        let (s, c_raw) = net.forward_one(p);
        vals.push(s);
        confs.push(clamp_conf(c_raw));
    }
    if vals.is_empty() {
        return None;
    }
    let c_max = confs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, c) in vals.iter().zip(&confs) {
        let w = (alpha * (c - c_max)).exp();
        num += s * w;
        den += w;
    }
    Some(num / den)
}

/// Softmax-fused value and spatial gradient, differentiating through both
/// the per-map signed distances and their confidences; the clamp contributes
/// zero gradient where active.
pub fn fused_smooth_grad<'a, T: Scalar + 'a, const D: usize>(
    nets: impl Iterator<Item = &'a NetParams<T, D>>,
    alpha: f64,
    p: &Point<D>,
) -> Option<(f64, Point<D>)> {
    struct Term<const D: usize> {
        s: f64,
        ds: Point<D>,
        c: f64,
        dc: Point<D>,
    }
    let mut terms: Vec<Term<D>> = Vec::new();
    for net in nets {
        let (sdf, conf) = net.forward_dual_batch(std::slice::from_ref(p));
        let raw_c = conf[0].value;
        let dc = if (CONFIDENCE_FLOOR..CONFIDENCE_CEIL).contains(&raw_c) {
            conf[0].grad
        } else {
            Point::<D>::zeros()
        };
        terms.push(Term {
            s: sdf[0].value,
            ds: sdf[0].grad,
            c: clamp_conf(raw_c),
            dc,
        });
    }
    if terms.is_empty() {
        return None;
    }
    let c_max = terms.iter().map(|t| t.c).fold(f64::NEG_INFINITY, f64::max);
    let mut den = 0.0;
    let mut num = 0.0;
    for t in &terms {
        let w = (alpha * (t.c - c_max)).exp();
        num += t.s * w;
        den += w;
    }
    let value = num / den;
    // d/dp [sum s_i w_i / sum w_i] with w_i = exp(alpha c_i):
    // sum w_i (ds_i + alpha (s_i - value) dc_i) / sum w_i.
    let mut grad = Point::<D>::zeros();
    for t in &terms {
        let w = (alpha * (t.c - c_max)).exp();
        grad += (t.ds + t.dc * (alpha * (t.s - value))) * w;
    }
    Some((value, grad / den))
}

/// Frozen parameters of one cached local map plus its training-region
/// summary. Never mutated after caching.
#[derive(Clone, Debug)]
pub struct LocalMapRecord<const D: usize> {
    pub params: NetParams<f32, D>,
    /// Bounding box of the surface samples ingested while this map trained;
    /// diagnostic only, queries never clip spatially.
    pub region: Option<Bbox<D>>,
    /// Global training step at which the map was cached.
    pub created_step: u64,
    /// Loss EMA at cache time.
    pub final_loss: f64,
}

/// Ordered collection of cached local maps plus the latest published
/// snapshot of the in-training map. The active snapshot counts as the most
/// recent map in every query, so the planner is never blind in fresh
/// territory.
#[derive(Clone, Debug, Default)]
pub struct GlobalSdfMap<const D: usize> {
    pub records: Vec<LocalMapRecord<D>>,
    pub active: Option<NetParams<f32, D>>,
    /// Softmax fusion sharpness.
    pub alpha: f64,
}

impl<const D: usize> GlobalSdfMap<D> {
    pub fn new(alpha: f64) -> Self {
        Self {
            records: Vec::new(),
            active: None,
            alpha,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.active.is_none()
    }

    pub fn map_count(&self) -> usize {
        self.records.len() + usize::from(self.active.is_some())
    }

    /// All participating networks, oldest first; the active snapshot is the
    /// most recent entry.
    pub fn nets(&self) -> impl Iterator<Item = &NetParams<f32, D>> {
        self.records
            .iter()
            .map(|r| &r.params)
            .chain(self.active.iter())
    }

    /// Hard-argmax fused query: the signed distance of the most confident
    /// map at `p`. Confidence ties resolve to the most recent map.
    pub fn global_query(&self, p: &Point<D>) -> Result<f64, MapperError> {
        fused_argmax(self.nets(), p)
            .map(|(s, _, _)| s)
            .ok_or(MapperError::EmptyMap)
    }

    /// Confidence of the selected (most confident) map at `p`, clamped.
    pub fn global_confidence(&self, p: &Point<D>) -> Result<f64, MapperError> {
        fused_argmax(self.nets(), p)
            .map(|(_, c, _)| c)
            .ok_or(MapperError::EmptyMap)
    }

    /// Which map the hard argmax selects at `p` (index into `nets()` order).
    pub fn selected_index(&self, p: &Point<D>) -> Result<usize, MapperError> {
        fused_argmax(self.nets(), p)
            .map(|(_, _, i)| i)
            .ok_or(MapperError::EmptyMap)
    }

    /// Softmax-fused query at the map's sharpness: differentiable everywhere
    /// and overflow-safe via max shift.
    pub fn global_query_smooth(&self, p: &Point<D>) -> Result<f64, MapperError> {
        self.global_query_smooth_at(p, self.alpha)
    }

    pub fn global_query_smooth_at(&self, p: &Point<D>, alpha: f64) -> Result<f64, MapperError> {
        fused_smooth(self.nets(), alpha, p).ok_or(MapperError::EmptyMap)
    }

    /// Softmax-fused value and spatial gradient.
    pub fn smooth_value_and_grad(&self, p: &Point<D>) -> Result<(f64, Point<D>), MapperError> {
        fused_smooth_grad(self.nets(), self.alpha, p).ok_or(MapperError::EmptyMap)
    }

    /// Batched hard-argmax queries: per point, the selected map's signed
    /// distance, its clamped confidence, and the selected index. One batched
    /// forward per network.
    pub fn query_batch(&self, pts: &[Point<D>]) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>), MapperError> {
        if self.is_empty() {
            return Err(MapperError::EmptyMap);
        }
        let mut values = vec![0.0; pts.len()];
        let mut confs = vec![f64::NEG_INFINITY; pts.len()];
        let mut selected = vec![0usize; pts.len()];
        for (i, net) in self.nets().enumerate() {
            let (s, c_raw) = net.forward_batch(pts);
            for j in 0..pts.len() {
                let c = clamp_conf(c_raw[j]);
                if c >= confs[j] {
                    confs[j] = c;
                    values[j] = s[j];
                    selected[j] = i;
                }
            }
        }
        Ok((values, confs, selected))
    }
}

impl<const D: usize> SdfField<D> for GlobalSdfMap<D> {
    fn value(&self, p: &Point<D>) -> f64 {
        self.global_query_smooth(p).expect("query on empty map")
    }

    fn value_and_grad(&self, p: &Point<D>) -> (f64, Point<D>) {
        self.smooth_value_and_grad(p).expect("query on empty map")
    }
}
