use std::io::{self, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::geom::{NnIndex, Point};

use super::labels::{LabeledSample, SampleKind};

/// Bounded training buffers: surface samples and augmented (free + interior)
/// samples, each uniformly subsampled back to capacity on merge.
#[derive(Clone, Debug)]
pub struct TrainingSet<const D: usize> {
    pub surface: Vec<LabeledSample<D>>,
    pub augmented: Vec<LabeledSample<D>>,
    surface_capacity: usize,
    augmented_capacity: usize,
}

impl<const D: usize> TrainingSet<D> {
    pub fn new(surface_capacity: usize, augmented_capacity: usize) -> Self {
        Self {
            surface: Vec::new(),
            augmented: Vec::new(),
            surface_capacity,
            augmented_capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.surface.len() + self.augmented.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenates new samples into their buffers, then uniformly
    /// downsamples each buffer back to capacity.
    pub fn merge<R: Rng>(&mut self, new_samples: Vec<LabeledSample<D>>, rng: &mut R) {
        for sample in new_samples {
            match sample.kind {
                SampleKind::Surface => self.surface.push(sample),
                SampleKind::Free | SampleKind::Interior => self.augmented.push(sample),
            }
        }
        downsample(&mut self.surface, self.surface_capacity, rng);
        downsample(&mut self.augmented, self.augmented_capacity, rng);
    }

    /// Surface points currently stored, in buffer order.
    pub fn surface_points(&self) -> Vec<Point<D>> {
        self.surface.iter().map(|s| s.p).collect()
    }

    /// Nearest-neighbor index over the stored surface, `None` when empty.
    pub fn surface_index(&self) -> Option<NnIndex<D>> {
        if self.surface.is_empty() {
            None
        } else {
            Some(NnIndex::build(self.surface_points()).expect("non-empty"))
        }
    }

    /// Draws a batch with replacement, mixing both buffers, with probability
    /// proportional to `1 / (|s| + weight_epsilon)`.
    pub fn sample_batch<R: Rng>(
        &self,
        batch_size: usize,
        weight_epsilon: f64,
        rng: &mut R,
    ) -> (Vec<Point<D>>, Vec<f64>, Vec<f64>) {
        assert!(!self.is_empty(), "sample_batch on an empty training set");
        let weights: Vec<f64> = self
            .surface
            .iter()
            .chain(self.augmented.iter())
            .map(|s| 1.0 / (s.s.abs() + weight_epsilon))
            .collect();
        let dist = WeightedIndex::new(&weights).expect("positive finite weights");
        let at = |i: usize| -> &LabeledSample<D> {
            if i < self.surface.len() {
                &self.surface[i]
            } else {
                &self.augmented[i - self.surface.len()]
            }
        };
        let mut pts = Vec::with_capacity(batch_size);
        let mut s = Vec::with_capacity(batch_size);
        let mut c = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let sample = at(dist.sample(rng));
            pts.push(sample.p);
            s.push(sample.s);
            c.push(sample.c);
        }
        (pts, s, c)
    }
}

/// Uniform random downsample to `capacity`, preserving draw order.
fn downsample<T, R: Rng>(buf: &mut Vec<T>, capacity: usize, rng: &mut R) {
    if buf.len() <= capacity {
        return;
    }
    let keep = rand::seq::index::sample(rng, buf.len(), capacity);
    let mut flags = vec![false; buf.len()];
    for idx in keep.iter() {
        flags[idx] = true;
    }
    let mut i = 0;
    buf.retain(|_| {
        let keep = flags[i];
        i += 1;
        keep
    });
}

/// Debug CSV dump: `x,y[,z],s,c,kind` per sample.
pub fn export_dataset_csv<W: Write, const D: usize>(
    mut w: W,
    set: &TrainingSet<D>,
) -> io::Result<()> {
    let axes = ["x", "y", "z"];
    let header: Vec<&str> = axes[..D].iter().copied().chain(["s", "c", "kind"]).collect();
    writeln!(w, "{}", header.join(","))?;
    for sample in set.surface.iter().chain(set.augmented.iter()) {
        for k in 0..D {
            write!(w, "{:?},", sample.p[k])?;
        }
        let kind = match sample.kind {
            SampleKind::Surface => "surface",
            SampleKind::Free => "free",
            SampleKind::Interior => "interior",
        };
        writeln!(w, "{:?},{:?},{kind}", sample.s, sample.c)?;
    }
    Ok(())
}
