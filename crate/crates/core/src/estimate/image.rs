//! Box-counting dimension of `F(K)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{DimensionEstimate, TestSet};
use crate::cascade::CascadeRealization;
use crate::error::{Error, Result};
use crate::predict::predicted_uniform_dim;

/// Coarsest dyadic scale that is counted.
pub const FIRST_SCALE: usize = 2;
/// Scales dropped at the coarse end of the fit.
pub const DROPPED_SCALES: usize = 2;
/// Fewest scales a fit may use.
pub const MIN_SCALES: usize = 4;
/// Finest scale ever counted, whatever the guard says.
pub const MAX_SCALE: usize = 40;

/// Default quantile of the depth-`n` box sides that sets the finest scale.
pub const GUARD_QUANTILE: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxOptions {
    /// Inclusive `(j_min, j_max)` overriding the default window; `j_max` is
    /// still clipped to the resolvability guard.
    pub scales: Option<(usize, usize)>,
    /// The guard keeps scales `2^{-j}` no finer than this quantile of the
    /// depth-`n` box sides; `1.0` is the largest side.
    pub guard_quantile: f64,
}

impl Default for BoxOptions {
    fn default() -> Self {
        BoxOptions {
            scales: None,
            guard_quantile: GUARD_QUANTILE,
        }
    }
}

/// Levels a realization must extend below the stored depth of a test set.
pub const SET_MARGIN: usize = 4;

pub fn image_box_dim(real: &CascadeRealization, set: &TestSet) -> Result<DimensionEstimate> {
    image_box_dim_with(real, set, &BoxOptions::default())
}

/// Covers `F(K)` by bounding boxes of `F` over cells meeting `K` and counts
/// the dyadic squares of side `2^{-j}` they meet.
///
/// The fit runs from `FIRST_SCALE + DROPPED_SCALES` to the guard `j_max`, the
/// finest `j` with `2^{-j}` at least the `guard_quantile` of the box sides of
/// depth-`n` cells. The cover splits each cell into its children meeting `K`
/// until its box side is at most `2^{-j_max} · RESOLUTION` or it reaches
/// depth `n`; every scale is counted on that one cover.
pub fn image_box_dim_with(
    real: &CascadeRealization,
    set: &TestSet,
    opts: &BoxOptions,
) -> Result<DimensionEstimate> {
    if set.base() != real.base() {
        return Err(Error::Domain(format!(
            "test set base {} differs from model base {}",
            set.base(),
            real.base()
        )));
    }
    let n = real.depth();
    if set.depth() + SET_MARGIN > n {
        return Err(Error::DepthExceeded {
            requested: set.depth() + SET_MARGIN,
            available: n,
        });
    }
    let q = opts.guard_quantile;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Config(format!("guard quantile {q} must lie in (0, 1]")));
    }
    let cells = (0..=n)
        .map(|level| set.indices_at(level))
        .collect::<Result<Vec<_>>>()?;
    let mut sides: Vec<f64> = cells[n]
        .par_iter()
        .map(|&i| box_side(&cell_box(real, n, i as usize)))
        .collect();
    sides.par_sort_unstable_by(f64::total_cmp);
    let side = sides[((sides.len() - 1) as f64 * q).round() as usize];
    let guard = if side > 0.0 {
        ((-side.log2()).floor().max(0.0) as usize).min(MAX_SCALE)
    } else {
        MAX_SCALE
    };
    let range = match opts.scales {
        Some((lo, hi)) if lo > hi || lo < FIRST_SCALE => {
            return Err(Error::Config(format!("scale window {lo}:{hi} is invalid")));
        }
        Some((lo, hi)) => (lo, hi.min(guard)),
        None => (FIRST_SCALE + DROPPED_SCALES, guard),
    };
    let top = range.1.max(FIRST_SCALE);
    let boxes = cover(real, &cells, RESOLUTION * (-(top as f64)).exp2());
    let counts: Vec<(usize, f64)> = (FIRST_SCALE..=top)
        .into_par_iter()
        .map(|j| (j, count_squares(&boxes, j) as f64))
        .collect();
    DimensionEstimate::from_counts(counts, range, 2.0, MIN_SCALES)
}

/// Largest box side, relative to the finest counted scale, at which a cell
/// of the cover is no longer split.
pub const RESOLUTION: f64 = 0.25;

#[inline]
fn cell_box(real: &CascadeRealization, level: usize, index: usize) -> [f64; 4] {
    let (a, b) = real.range_at(0, level, index);
    let (c, d) = real.range_at(1, level, index);
    [a, b, c, d]
}

#[inline]
fn box_side(r: &[f64; 4]) -> f64 {
    (r[1] - r[0]).max(r[3] - r[2])
}

/// Boxes of the coarsest cells meeting `K` whose side is at most `threshold`,
/// or of depth-`n` cells where none is.
fn cover(real: &CascadeRealization, cells: &[Vec<u64>], threshold: f64) -> Vec<[f64; 4]> {
    let b = real.base() as u64;
    let n = cells.len() - 1;
    let mut boxes = Vec::new();
    let mut frontier: Vec<u64> = cells[0].clone();
    for level in 0..=n {
        let mut next = Vec::new();
        for &i in &frontier {
            let r = cell_box(real, level, i as usize);
            if level == n || box_side(&r) <= threshold {
                boxes.push(r);
            } else {
                let below = &cells[level + 1];
                let a = below.partition_point(|&c| c < i * b);
                let z = below.partition_point(|&c| c < (i + 1) * b);
                next.extend_from_slice(&below[a..z]);
            }
        }
        frontier = next;
    }
    boxes
}

/// Number of distinct squares `[i 2^{-j}, (i+1) 2^{-j}) × …` meeting some box.
/// A box edge lying on a grid line does not reach past it.
fn count_squares(boxes: &[[f64; 4]], j: usize) -> usize {
    let scale = (j as f64).exp2();
    let span = |lo: f64, hi: f64| {
        let a = (lo * scale).floor() as i64;
        let z = ((hi * scale).ceil() as i64 - 1).max(a);
        a..=z
    };
    let mut squares: Vec<(i64, i64)> = Vec::with_capacity(boxes.len());
    for r in boxes {
        for x in span(r[0], r[1]) {
            for y in span(r[2], r[3]) {
                squares.push((x, y));
            }
        }
    }
    squares.sort_unstable();
    squares.dedup();
    squares.len()
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub xi0: f64,
    pub estimate: DimensionEstimate,
    pub prediction: f64,
}

/// [`image_box_dim`] of several sets on one realization, next to `ξ₀ / α`.
pub fn uniform_sweep(real: &CascadeRealization, sets: &[TestSet]) -> Result<Vec<SweepRow>> {
    predicted_uniform_dim(real.model(), 1.0)?;
    sets.par_iter()
        .map(|set| {
            let xi0 = set.dimension();
            Ok(SweepRow {
                xi0,
                estimate: image_box_dim(real, set)?,
                prediction: predicted_uniform_dim(real.model(), xi0)?,
            })
        })
        .collect()
}
