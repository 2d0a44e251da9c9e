//! Level sets `{x : F_k(x) = y}` and the occupation histogram used to pick `y`.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use super::DimensionEstimate;
use crate::cascade::CascadeRealization;
use crate::error::{Error, Result};
use crate::words::Word;

/// Levels kept between the finest level-set level and the realization depth.
pub const LEVEL_MARGIN: usize = 4;

#[derive(Clone, Debug)]
pub struct LevelSet {
    pub k: usize,
    pub y: f64,
    pub level: usize,
    /// Words at `level` whose closed interval carries grid values on both sides of `y`.
    pub words: Vec<Word>,
    pub estimate: DimensionEstimate,
}

fn brackets(real: &CascadeRealization, k: usize, level: usize, index: usize, y: f64) -> bool {
    let (lo, hi) = real.range_at(k, level, index);
    lo <= y && y <= hi
}

pub fn level_set(real: &CascadeRealization, k: usize, y: f64, level: usize) -> Result<LevelSet> {
    level_set_with(real, k, y, level, None)
}

/// Crossing words of `F_k` at `y` down to `level`, and the slope of
/// `log_b(count)` against the level over `window` (default `level/3 ..= level`).
pub fn level_set_with(
    real: &CascadeRealization,
    k: usize,
    y: f64,
    level: usize,
    window: Option<(usize, usize)>,
) -> Result<LevelSet> {
    if k > 1 {
        return Err(Error::Domain(format!("component {k} is not 0 or 1")));
    }
    if level + LEVEL_MARGIN > real.depth() {
        return Err(Error::DepthExceeded {
            requested: level + LEVEL_MARGIN,
            available: real.depth(),
        });
    }
    let window = window.unwrap_or(((level / 3).max(1), level));
    if window.1 > level || window.0 >= window.1 {
        return Err(Error::Config(format!(
            "window {window:?} must be increasing and end by level {level}"
        )));
    }
    if !brackets(real, k, 0, 0, y) {
        return Ok(LevelSet {
            k,
            y,
            level,
            words: Vec::new(),
            estimate: DimensionEstimate::empty_set(window),
        });
    }
    let b = real.base() as usize;
    let mut current = vec![0usize];
    let mut counts = Vec::with_capacity(level);
    for m in 1..=level {
        current = current
            .iter()
            .flat_map(|&p| (p * b..(p + 1) * b).filter(|&c| brackets(real, k, m, c, y)))
            .collect();
        counts.push((m, current.len() as f64));
    }
    let estimate = DimensionEstimate::from_counts(counts, window, b as f64, 2)?;
    let words = current
        .iter()
        .map(|&i| Word::from_index(real.base(), level, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelSet {
        k,
        y,
        level,
        words,
        estimate,
    })
}

/// Share of the depth-`n` grid cells whose left value of `F_k` falls in each bin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.masses.len() as f64
    }

    /// Picks a bin by mass, then a point uniformly inside it.
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let mut u = rng.random::<f64>();
        let mut bin = self.masses.iter().rposition(|&m| m > 0.0).unwrap_or(0);
        for (i, &m) in self.masses.iter().enumerate() {
            if u < m {
                bin = i;
                break;
            }
            u -= m;
        }
        self.lo + (bin as f64 + rng.random::<f64>()) * self.bin_width()
    }
}

pub fn occupation_histogram(real: &CascadeRealization, k: usize, bins: usize) -> Result<Histogram> {
    if bins < 8 {
        return Err(Error::Config(format!("{bins} bins, need at least 8")));
    }
    if k > 1 {
        return Err(Error::Domain(format!("component {k} is not 0 or 1")));
    }
    let grid = real.grid(k);
    let values = &grid[..grid.len() - 1];
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let counts = values
        .par_iter()
        .fold(
            || vec![0u64; bins],
            |mut acc, &v| {
                let i = if width > 0.0 {
                    (((v - lo) / width) as usize).min(bins - 1)
                } else {
                    0
                };
                acc[i] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = values.len() as f64;
    Ok(Histogram {
        k,
        lo,
        hi,
        masses: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}
