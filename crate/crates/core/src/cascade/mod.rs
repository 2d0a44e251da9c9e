//! Seeded depth-`n` realizations of the cascade process.
//!
//! A [`CascadeRealization`] holds, for every level `m ≤ n`, the partial
//! products `Q_k(w)` of all words of length `m` (flat arrays indexed by the
//! integer code of `w`), the grid values `F_{k,n}(j·b^{-n})` and a min/max
//! pyramid of those grid values over every closed interval `Ī_w`. The weight
//! at node `w` is drawn from a stream keyed by `(seed, |w|, code(w))`, so the
//! realization is a pure function of `(model, seed, depth)`.

mod export;
mod tilt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::KeyedRng;
use crate::weights::WeightModel;
use crate::words::{pow_checked, Word};

pub use export::{cache_path, load_binary, save_binary, write_level_csv};
pub use tilt::{
    sample_tilted_path, tilted_weight, DigitChooser, NormalizedTilt, SubtreeMassTilt, TiltRegistry,
    TiltRule,
};

/// Default cap on `b^{depth+1}`.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 26;

/// Default depth for a base: 18 levels for `b = 2`, 12 for `b = 3`, and
/// otherwise the deepest level with at most `2^18` leaves.
pub fn default_depth(base: u32) -> usize {
    match base {
        2 => 18,
        3 => 12,
        _ => {
            let mut n = 1;
            while (base as u64).pow(n as u32 + 1) <= 1 << 18 {
                n += 1;
            }
            n
        }
    }
}

/// The weight `W(w)` of the node at `level` with integer code `index`.
#[inline]
pub fn node_weight(model: &WeightModel, seed: u64, level: usize, index: u64) -> (f64, f64) {
    model.sample(&mut KeyedRng::node(seed, level, index))
}

#[derive(Clone, Debug)]
struct Level {
    /// `Q_k(w)` for every word of this length.
    products: [Vec<f64>; 2],
    /// min / max of the depth-`n` grid values of `F_k` over `Ī_w`.
    lo: [Vec<f64>; 2],
    hi: [Vec<f64>; 2],
}

#[derive(Clone, Debug)]
pub struct CascadeRealization {
    model: WeightModel,
    seed: u64,
    depth: usize,
    levels: Vec<Level>,
    grid: [Vec<f64>; 2],
}

/// Per-word oscillations `O_k(w)` at one level.
#[derive(Clone, Debug)]
pub struct OscillationTable {
    pub level: usize,
    pub o1: Vec<f64>,
    pub o2: Vec<f64>,
}

impl OscillationTable {
    pub fn len(&self) -> usize {
        self.o1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.o1.is_empty()
    }

    pub fn get(&self, k: usize, index: usize) -> f64 {
        if k == 0 {
            self.o1[index]
        } else {
            self.o2[index]
        }
    }
}

impl CascadeRealization {
    pub fn build(model: &WeightModel, seed: u64, depth: usize) -> Result<Self> {
        Self::build_with_budget(model, seed, depth, DEFAULT_CELL_BUDGET)
    }

    pub fn build_with_budget(
        model: &WeightModel,
        seed: u64,
        depth: usize,
        cell_budget: u64,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Domain("depth must be at least 1".into()));
        }
        let b = model.base() as u64;
        if !pow_checked(model.base(), depth + 1).is_ok_and(|c| c <= cell_budget) {
            return Err(Error::MemoryBudget(format!(
                "b^(depth+1) = {b}^{} exceeds the budget of {cell_budget} cells",
                depth + 1
            )));
        }

        let mut products: Vec<[Vec<f64>; 2]> = Vec::with_capacity(depth + 1);
        products.push([vec![1.0], vec![1.0]]);
        for m in 1..=depth {
            let parent = &products[m - 1];
            let width = b.pow(m as u32) as usize;
            let mut q1 = vec![0.0; width];
            let mut q2 = vec![0.0; width];
            q1.par_chunks_mut(b as usize)
                .zip(q2.par_chunks_mut(b as usize))
                .enumerate()
                .for_each(|(p, (c1, c2))| {
                    let (p1, p2) = (parent[0][p], parent[1][p]);
                    for j in 0..b as usize {
                        let index = (p as u64) * b + j as u64;
                        let (w1, w2) = node_weight(model, seed, m, index);
                        c1[j] = p1 * w1;
                        c2[j] = p2 * w2;
                    }
                });
            products.push([q1, q2]);
        }

        let grid = [0, 1].map(|k| {
            let leaves = &products[depth][k];
            let mut g = Vec::with_capacity(leaves.len() + 1);
            let mut acc = 0.0;
            g.push(acc);
            for &q in leaves {
                acc += q;
                g.push(acc);
            }
            g
        });

        let levels = build_pyramid(products, &grid, b as usize);
        Ok(CascadeRealization {
            model: model.clone(),
            seed,
            depth,
            levels,
            grid,
        })
    }

    /// Reassembles a realization from stored products and grid values.
    pub(crate) fn from_parts(
        model: &WeightModel,
        seed: u64,
        depth: usize,
        products: Vec<[Vec<f64>; 2]>,
        grid: [Vec<f64>; 2],
    ) -> Self {
        let levels = build_pyramid(products, &grid, model.base() as usize);
        CascadeRealization {
            model: model.clone(),
            seed,
            depth,
            levels,
            grid,
        }
    }

    pub fn model(&self) -> &WeightModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn base(&self) -> u32 {
        self.model.base()
    }

    /// Number of words at `level`.
    pub fn width(&self, level: usize) -> usize {
        self.levels[level].products[0].len()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level > self.depth {
            return Err(Error::DepthExceeded {
                requested: level,
                available: self.depth,
            });
        }
        Ok(())
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.base() != self.base() {
            return Err(Error::Domain(format!(
                "word base {} differs from model base {}",
                w.base(),
                self.base()
            )));
        }
        self.check_level(w.len())
    }

    /// `(Q₁(w), Q₂(w))`.
    pub fn partial_product(&self, w: &Word) -> Result<(f64, f64)> {
        self.check_word(w)?;
        Ok(self.product_at(w.len(), w.index() as usize))
    }

    #[inline]
    pub fn product_at(&self, level: usize, index: usize) -> (f64, f64) {
        let p = &self.levels[level].products;
        (p[0][index], p[1][index])
    }

    pub fn products(&self, level: usize, k: usize) -> &[f64] {
        &self.levels[level].products[k]
    }

    /// The weight `W(w)` re-drawn from the keyed stream.
    pub fn node_weight(&self, w: &Word) -> Result<(f64, f64)> {
        self.check_word(w)?;
        if w.is_empty() {
            return Err(Error::Domain("the root carries no weight".into()));
        }
        Ok(node_weight(&self.model, self.seed, w.len(), w.index()))
    }

    /// `F_{k,n}(j·b^{-n})` for `k ∈ {0, 1}`.
    pub fn grid(&self, k: usize) -> &[f64] {
        &self.grid[k]
    }

    /// Span of grid indices covered by the closed interval of word `index` at `level`.
    #[inline]
    pub fn grid_span(&self, level: usize, index: usize) -> (usize, usize) {
        let cells = (self.base() as usize).pow((self.depth - level) as u32);
        (index * cells, (index + 1) * cells)
    }

    /// `(ΔF₁, ΔF₂)` over `I_w`. At full depth this is the stored `Q_k(w)`
    /// rather than a difference of rounded cumulative sums.
    pub fn increment(&self, w: &Word) -> Result<(f64, f64)> {
        self.check_word(w)?;
        if w.len() == self.depth {
            return Ok(self.product_at(self.depth, w.index() as usize));
        }
        let (a, z) = self.grid_span(w.len(), w.index() as usize);
        Ok((
            self.grid[0][z] - self.grid[0][a],
            self.grid[1][z] - self.grid[1][a],
        ))
    }

    /// min and max of the grid values of `F_k` over `Ī_w`.
    #[inline]
    pub fn range_at(&self, k: usize, level: usize, index: usize) -> (f64, f64) {
        let l = &self.levels[level];
        (l.lo[k][index], l.hi[k][index])
    }

    pub fn oscillations(&self, level: usize) -> Result<OscillationTable> {
        self.check_level(level)?;
        let l = &self.levels[level];
        let diff = |k: usize| -> Vec<f64> {
            l.hi[k].iter().zip(&l.lo[k]).map(|(h, lo)| h - lo).collect()
        };
        Ok(OscillationTable {
            level,
            o1: diff(0),
            o2: diff(1),
        })
    }

    /// `O_k` of a single word.
    #[inline]
    pub fn oscillation_at(&self, k: usize, level: usize, index: usize) -> f64 {
        let (lo, hi) = self.range_at(k, level, index);
        hi - lo
    }
}

fn build_pyramid(products: Vec<[Vec<f64>; 2]>, grid: &[Vec<f64>; 2], b: usize) -> Vec<Level> {
    let depth = products.len() - 1;
    let mut lo: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; depth + 1];
    let mut hi: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; depth + 1];
    for k in 0..2 {
        let g = &grid[k];
        lo[depth][k] = g.windows(2).map(|w| w[0].min(w[1])).collect();
        hi[depth][k] = g.windows(2).map(|w| w[0].max(w[1])).collect();
        for m in (0..depth).rev() {
            lo[m][k] = lo[m + 1][k]
                .par_chunks(b)
                .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                .collect();
            hi[m][k] = hi[m + 1][k]
                .par_chunks(b)
                .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
        }
    }
    products
        .into_iter()
        .zip(lo.into_iter().zip(hi))
        .map(|(products, (lo, hi))| Level { products, lo, hi })
        .collect()
}
