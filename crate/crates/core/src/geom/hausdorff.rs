use super::{GeomError, NnIndex, Point};

/// Directed Hausdorff distance: `max_{a in A} min_{b in B} ||a - b||`.
///
/// Asymmetric — it measures how far `a_set` strays from `b_set`, which is
/// exactly the novelty measure scan gating needs.
pub fn directed_hausdorff<const D: usize>(
    a_set: &[Point<D>],
    b_set: &[Point<D>],
) -> Result<f64, GeomError> {
    if a_set.is_empty() || b_set.is_empty() {
        return Err(GeomError::EmptyInput);
    }
    if b_set.len() <= 32 {
        // Tiny targets: the double loop beats building a tree.
        let mut worst = 0.0f64;
        for a in a_set {
            let mut best = f64::INFINITY;
            for b in b_set {
                best = best.min((a - b).norm_squared());
            }
            worst = worst.max(best);
        }
        return Ok(worst.sqrt());
    }
    let index = NnIndex::build(b_set.to_vec())?;
    let mut worst = 0.0f64;
    for a in a_set {
        let (d, _) = index.nearest(a);
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Directed Hausdorff against a prebuilt index; avoids rebuilding the tree
/// when the same target set is probed repeatedly.
pub fn directed_hausdorff_to_index<const D: usize>(
    a_set: &[Point<D>],
    index: &NnIndex<D>,
) -> Result<f64, GeomError> {
    if a_set.is_empty() {
        return Err(GeomError::EmptyInput);
    }
    let mut worst = 0.0f64;
    for a in a_set {
        let (d, _) = index.nearest(a);
        worst = worst.max(d);
    }
    Ok(worst)
}
