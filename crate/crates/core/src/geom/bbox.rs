use serde::{Deserialize, Serialize};

use super::{GeomError, Point};

/// Axis-aligned bounding box, min strictly below max on every axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox<const D: usize> {
    pub min: Point<D>,
    pub max: Point<D>,
}

impl<const D: usize> Bbox<D> {
    pub fn new(min: Point<D>, max: Point<D>) -> Result<Self, GeomError> {
        if min.iter().zip(max.iter()).all(|(lo, hi)| lo < hi) {
            Ok(Self { min, max })
        } else {
            Err(GeomError::DegenerateBbox)
        }
    }

    /// Smallest box containing a non-empty point set.
    pub fn around(points: &[Point<D>]) -> Result<Self, GeomError> {
        let first = points.first().ok_or(GeomError::EmptyInput)?;
        let mut min = *first;
        let mut max = *first;
        for p in points {
            for i in 0..D {
                min[i] = min[i].min(p[i]);
                max[i] = max[i].max(p[i]);
            }
        }
        Ok(Self { min, max })
    }

    pub fn center(&self) -> Point<D> {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Point<D> {
        (self.max - self.min) * 0.5
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Grows the box by `margin` on every side.
    pub fn inflate(&self, margin: f64) -> Self {
        Self {
            min: self.min.map(|v| v - margin),
            max: self.max.map(|v| v + margin),
        }
    }

    /// Componentwise intersection; `None` if the boxes do not overlap.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let mut min = self.min;
        let mut max = self.max;
        for i in 0..D {
            min[i] = min[i].max(other.min[i]);
            max[i] = max[i].min(other.max[i]);
            if min[i] >= max[i] {
                return None;
            }
        }
        Some(Self { min, max })
    }

    /// Merges another box into this one.
    pub fn merge(&mut self, other: &Self) {
        for i in 0..D {
            self.min[i] = self.min[i].min(other.min[i]);
            self.max[i] = self.max[i].max(other.max[i]);
        }
    }

    /// Extends the box to include `p`.
    pub fn extend(&mut self, p: &Point<D>) {
        for i in 0..D {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }
}
