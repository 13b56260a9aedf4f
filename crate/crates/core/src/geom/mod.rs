//! Dimension-generic (D ∈ {2, 3}) geometric primitives and queries.

mod algebra;
mod bbox;
mod hausdorff;
mod kdtree;
mod levelset;
mod primitive;

pub use algebra::{sdf_intersection, sdf_union};
pub use bbox::Bbox;
pub use hausdorff::{directed_hausdorff, directed_hausdorff_to_index};
pub use kdtree::NnIndex;
pub use levelset::{
    extract_level_set_2d, extract_level_set_3d, write_segments_csv, write_triangles_obj, Segment2,
    Triangle3,
};
pub use primitive::{Point, Primitive};

use thiserror::Error;

/// A scalar distance-like field with a spatial gradient, the query surface
/// shared by analytic ground truth and learned maps.
pub trait SdfField<const D: usize> {
    fn value(&self, p: &Point<D>) -> f64;
    fn value_and_grad(&self, p: &Point<D>) -> (f64, Point<D>);
}

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("operation requires a non-empty input set")]
    EmptyInput,
    #[error("degenerate bounding box: min must be strictly below max on every axis")]
    DegenerateBbox,
    #[error("level-set resolution must be at least 2 cells per axis, got {0}")]
    BadResolution(usize),
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
}
