//! Self-similar test sets built from kept digit blocks.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::words::{check_base, pow_checked, Word};

/// Largest number of words a set may expand to.
const MAX_WORDS: usize = 1 << 26;

/// `K = {x : every length-L block of the b-adic digits of x lies in D}`.
///
/// With `L = 1` this is the usual Cantor set on kept digits. Its Hausdorff
/// and packing dimensions equal `log_{b^L} |D|`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSet {
    base: u32,
    block_len: usize,
    blocks: Vec<u64>,
    generations: usize,
}

impl TestSet {
    pub fn cantor_set(base: u32, keep: &[u8], depth: usize) -> Result<Self> {
        let blocks: Vec<u64> = keep.iter().map(|&d| d as u64).collect();
        Self::block_set(base, 1, &blocks, depth)
    }

    /// Blocks are given by their index in `0..b^L`.
    pub fn block_set(base: u32, block_len: usize, blocks: &[u64], generations: usize) -> Result<Self> {
        check_base(base)?;
        if block_len == 0 {
            return Err(Error::Domain("block length must be positive".into()));
        }
        let width = pow_checked(base, block_len)?;
        let kept: BTreeSet<u64> = blocks.iter().copied().collect();
        if kept.is_empty() {
            return Err(Error::Domain("test set keeps no digits".into()));
        }
        if let Some(bad) = kept.iter().find(|&&d| d >= width) {
            return Err(Error::Domain(format!(
                "block {bad} is not below {base}^{block_len}"
            )));
        }
        Ok(TestSet {
            base,
            block_len,
            blocks: kept.into_iter().collect(),
            generations,
        })
    }

    /// The whole unit interval.
    pub fn unit_interval(base: u32) -> Result<Self> {
        let all: Vec<u8> = (0..base as u8).collect();
        Self::cantor_set(base, &all, 1)
    }

    /// Parses `interval`, `cantor:<digits>:<depth>` or
    /// `blocks:<L>:<w>,<w>,…:<generations>`, digits written in base `b`.
    pub fn parse(spec: &str, base: u32) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse test set `{spec}`"));
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let number = |s: &str| s.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["interval"] => Self::unit_interval(base),
            ["cantor", digits, depth] => {
                let w = Word::parse(base, digits).map_err(|_| bad())?;
                Self::cantor_set(base, w.digits(), number(depth)?)
            }
            ["blocks", len, list, gens] => {
                let len = number(len)?;
                let mut blocks = Vec::new();
                for item in list.split(',') {
                    let w = Word::parse(base, item).map_err(|_| bad())?;
                    if w.len() != len {
                        return Err(bad());
                    }
                    blocks.push(w.index());
                }
                Self::block_set(base, len, &blocks, number(gens)?)
            }
            _ => Err(bad()),
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    /// Word length of the surviving intervals.
    pub fn depth(&self) -> usize {
        self.block_len * self.generations
    }

    /// `log_{b^L} |D|`.
    pub fn dimension(&self) -> f64 {
        (self.blocks.len() as f64).ln() / (self.block_len as f64 * (self.base as f64).ln())
    }

    pub fn len(&self) -> usize {
        self.blocks.len().pow(self.generations as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> Result<Vec<Word>> {
        self.indices_at(self.depth())?
            .into_iter()
            .map(|i| Word::from_index(self.base, self.depth(), i))
            .collect()
    }

    /// Sorted indices of the level-`level` words meeting `K`; the construction
    /// is continued past the stored generation count when needed.
    pub fn indices_at(&self, level: usize) -> Result<Vec<u64>> {
        pow_checked(self.base, level)?;
        let full = level / self.block_len;
        let rem = level % self.block_len;
        let partial: Vec<u64> = {
            let shift = pow_checked(self.base, self.block_len - rem)?;
            let set: BTreeSet<u64> = self.blocks.iter().map(|b| b / shift).collect();
            set.into_iter().collect()
        };
        let total = (self.blocks.len() as f64).powi(full as i32) * partial.len() as f64;
        if total > MAX_WORDS as f64 {
            return Err(Error::MemoryBudget(format!(
                "test set has {total} words at level {level}"
            )));
        }
        let width = pow_checked(self.base, self.block_len)?;
        let mut words = vec![0u64];
        for _ in 0..full {
            words = words
                .iter()
                .flat_map(|&x| self.blocks.iter().map(move |&b| x * width + b))
                .collect();
        }
        if rem > 0 {
            let step = pow_checked(self.base, rem)?;
            words = words
                .iter()
                .flat_map(|&x| partial.iter().map(move |&p| x * step + p))
                .collect();
        }
        Ok(words)
    }
}
