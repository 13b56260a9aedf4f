use super::{GeomError, Point};

/// Default leaf size for the nearest-neighbor index.
pub const DEFAULT_LEAF_CAPACITY: usize = 50;

#[derive(Clone, Debug)]
enum Node {
    Split {
        axis: usize,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        start: u32,
        len: u32,
    },
}

/// Balanced K-D tree over a fixed point set.
///
/// Nearest queries return exactly the brute-force result, with ties broken
/// toward the lowest insertion index so downstream labeling is deterministic.
#[derive(Clone, Debug)]
pub struct NnIndex<const D: usize> {
    points: Vec<Point<D>>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

impl<const D: usize> NnIndex<D> {
    /// Builds the index with the default leaf capacity of 50 points.
    pub fn build(points: Vec<Point<D>>) -> Result<Self, GeomError> {
        Self::build_with_leaf_capacity(points, DEFAULT_LEAF_CAPACITY)
    }

    pub fn build_with_leaf_capacity(
        points: Vec<Point<D>>,
        leaf_capacity: usize,
    ) -> Result<Self, GeomError> {
        if points.is_empty() {
            return Err(GeomError::EmptyInput);
        }
        let leaf_capacity = leaf_capacity.max(1);
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = build_node(&points, &mut order, 0, &mut nodes, leaf_capacity);
        Ok(Self {
            points,
            order,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, idx: usize) -> &Point<D> {
        &self.points[idx]
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    /// Euclidean distance to the closest stored point and its insertion index.
    pub fn nearest(&self, p: &Point<D>) -> (f64, usize) {
        let mut best_d2 = f64::INFINITY;
        let mut best_idx = u32::MAX;
        self.search(self.root, p, &mut best_d2, &mut best_idx);
        (best_d2.sqrt(), best_idx as usize)
    }

    /// Distance and coordinates of the nearest stored point.
    pub fn nearest_point(&self, p: &Point<D>) -> (f64, Point<D>) {
        let (d, idx) = self.nearest(p);
        (d, self.points[idx])
    }

    fn search(&self, node: u32, p: &Point<D>, best_d2: &mut f64, best_idx: &mut u32) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, len } => {
                for &idx in &self.order[*start as usize..(*start + *len) as usize] {
                    let d2 = (self.points[idx as usize] - p).norm_squared();
                    if d2 < *best_d2 || (d2 == *best_d2 && idx < *best_idx) {
                        *best_d2 = d2;
                        *best_idx = idx;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = p[*axis] - value;
                let (near, far) = if delta < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, p, best_d2, best_idx);
                // <= keeps equal-distance candidates reachable so the
                // lowest-index tie-break stays exact.
                if delta * delta <= *best_d2 {
                    self.search(far, p, best_d2, best_idx);
                }
            }
        }
    }
}

fn build_node<const D: usize>(
    points: &[Point<D>],
    order: &mut [u32],
    offset: u32,
    nodes: &mut Vec<Node>,
    leaf_capacity: usize,
) -> u32 {
    if order.len() <= leaf_capacity {
        nodes.push(Node::Leaf {
            start: offset,
            len: order.len() as u32,
        });
        return (nodes.len() - 1) as u32;
    }

    // Split along the axis with the widest spread.
    let mut axis = 0;
    let mut widest = f64::NEG_INFINITY;
    for d in 0..D {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &idx in order.iter() {
            let v = points[idx as usize][d];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > widest {
            widest = hi - lo;
            axis = d;
        }
    }
    if widest == 0.0 {
        // All remaining points coincide; a leaf is the only sensible node.
        nodes.push(Node::Leaf {
            start: offset,
            len: order.len() as u32,
        });
        return (nodes.len() - 1) as u32;
    }

    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .partial_cmp(&points[b as usize][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let value = points[order[mid] as usize][axis];

    let (left_slice, right_slice) = order.split_at_mut(mid);
    let left = build_node(points, left_slice, offset, nodes, leaf_capacity);
    let right = build_node(points, right_slice, offset + mid as u32, nodes, leaf_capacity);
    nodes.push(Node::Split {
        axis,
        value,
        left,
        right,
    });
    (nodes.len() - 1) as u32
}
