//! Tilted path sampling.
//!
//! A path is grown digit by digit from the root. At node `w` the next digit
//! `j` is drawn with probability proportional to a rule-specific weight of the
//! child `w·j`, built from the tilted node weight
//! `W̃(w·j) = b^{Φ(q)} |W₁(w·j)|^{q₁} |W₂(w·j)|^{q₂}`.
//!
//! * `normalized`: weight `W̃(w·j)` alone.
//! * `subtree-mass`: weight `W̃(w·j) · M(w·j)`, where `M` is the mass of the
//!   depth-limited tilted cascade below `w·j`. This samples exactly from the
//!   finite-depth tilted measure `Π W̃(x|_i) dx`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::{node_weight, CascadeRealization};
use crate::error::{Error, Result};
use crate::words::Word;

/// `b^{Φ(q)} |w₁|^{q₁} |w₂|^{q₂}` with `0^0 = 1`.
#[inline]
pub fn tilted_weight(w: (f64, f64), q: (f64, f64), scale: f64) -> f64 {
    let part = |x: f64, e: f64| if e == 0.0 { 1.0 } else { x.abs().powf(e) };
    scale * part(w.0, q.0) * part(w.1, q.1)
}

/// Per-node digit weights for one `(realization, q, depth)`.
pub trait DigitChooser: Send + Sync {
    /// Unnormalized weights of the `b` children of the node `(level, parent)`.
    fn child_weights(&self, level: usize, parent: u64, out: &mut [f64]);
}

/// A way of turning tilted weights into digit probabilities.
pub trait TiltRule: Send + Sync {
    fn name(&self) -> &'static str;

    fn prepare<'a>(
        &self,
        real: &'a CascadeRealization,
        q: (f64, f64),
        target_depth: usize,
    ) -> Result<Box<dyn DigitChooser + 'a>>;
}

fn tilt_scale(real: &CascadeRealization, q: (f64, f64)) -> Result<f64> {
    let phi = real.model().phi(q.0, q.1);
    if !phi.is_finite() {
        return Err(Error::Divergence(format!("Φ({}, {}) is not finite", q.0, q.1)));
    }
    Ok((real.base() as f64).powf(phi))
}

fn child_tilts(real: &CascadeRealization, q: (f64, f64), scale: f64, level: usize, parent: u64, out: &mut [f64]) {
    let b = real.base() as u64;
    for (j, slot) in out.iter_mut().enumerate() {
        let w = node_weight(real.model(), real.seed(), level + 1, parent * b + j as u64);
        *slot = tilted_weight(w, q, scale);
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NormalizedTilt;

struct NormalizedChooser<'a> {
    real: &'a CascadeRealization,
    q: (f64, f64),
    scale: f64,
}

impl DigitChooser for NormalizedChooser<'_> {
    fn child_weights(&self, level: usize, parent: u64, out: &mut [f64]) {
        child_tilts(self.real, self.q, self.scale, level, parent, out);
    }
}

impl TiltRule for NormalizedTilt {
    fn name(&self) -> &'static str {
        "normalized"
    }

    fn prepare<'a>(
        &self,
        real: &'a CascadeRealization,
        q: (f64, f64),
        _target_depth: usize,
    ) -> Result<Box<dyn DigitChooser + 'a>> {
        Ok(Box::new(NormalizedChooser {
            real,
            q,
            scale: tilt_scale(real, q)?,
        }))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SubtreeMassTilt;

struct MassChooser {
    base: usize,
    /// `W̃(w)·M(w)` for every word of length `1..=depth`; index 0 is unused.
    weighted: Vec<Vec<f64>>,
}

impl DigitChooser for MassChooser {
    fn child_weights(&self, level: usize, parent: u64, out: &mut [f64]) {
        let start = parent as usize * self.base;
        out.copy_from_slice(&self.weighted[level + 1][start..start + self.base]);
    }
}

impl TiltRule for SubtreeMassTilt {
    fn name(&self) -> &'static str {
        "subtree-mass"
    }

    fn prepare<'a>(
        &self,
        real: &'a CascadeRealization,
        q: (f64, f64),
        target_depth: usize,
    ) -> Result<Box<dyn DigitChooser + 'a>> {
        let scale = tilt_scale(real, q)?;
        let b = real.base() as usize;
        let model = real.model();
        let seed = real.seed();
        // weighted[m][i] = W̃(w)·M(w), with M(w) = (1/b) Σ_j W̃(w·j)·M(w·j) and M = 1 at the bottom
        let mut weighted: Vec<Vec<f64>> = vec![Vec::new(); target_depth + 1];
        for m in (1..=target_depth).rev() {
            let width = b.pow(m as u32);
            let below = if m == target_depth {
                None
            } else {
                Some(&weighted[m + 1])
            };
            let layer: Vec<f64> = (0..width)
                .into_par_iter()
                .map(|i| {
                    let w = node_weight(model, seed, m, i as u64);
                    let mass = match below {
                        None => 1.0,
                        Some(next) => next[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64,
                    };
                    tilted_weight(w, q, scale) * mass
                })
                .collect();
            weighted[m] = layer;
        }
        Ok(Box::new(MassChooser { base: b, weighted }))
    }
}

/// Tilt rules by name.
#[derive(Clone)]
pub struct TiltRegistry {
    rules: BTreeMap<&'static str, Arc<dyn TiltRule>>,
}

impl Default for TiltRegistry {
    fn default() -> Self {
        let mut r = TiltRegistry {
            rules: BTreeMap::new(),
        };
        r.register(Arc::new(NormalizedTilt));
        r.register(Arc::new(SubtreeMassTilt));
        r
    }
}

impl TiltRegistry {
    pub fn register(&mut self, rule: Arc<dyn TiltRule>) {
        self.rules.insert(rule.name(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TiltRule>> {
        self.rules.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown tilt rule `{name}` (known: {})",
                self.rules.keys().copied().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

/// Grows one path of length `target_depth` using a prepared chooser.
pub fn sample_tilted_path(
    real: &CascadeRealization,
    chooser: &dyn DigitChooser,
    target_depth: usize,
    rng: &mut dyn RngCore,
) -> Result<Word> {
    if target_depth > real.depth() {
        return Err(Error::DepthExceeded {
            requested: target_depth,
            available: real.depth(),
        });
    }
    let b = real.base() as usize;
    let mut weights = vec![0.0; b];
    let mut digits = Vec::with_capacity(target_depth);
    let mut index = 0u64;
    for level in 0..target_depth {
        chooser.child_weights(level, index, &mut weights);
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Divergence(format!(
                "tilted child weights at level {level} sum to {total}"
            )));
        }
        let mut u = rng.random::<f64>() * total;
        // rounding can leave u past the last bucket; fall back to the last live child
        let mut digit = weights.iter().rposition(|&w| w > 0.0).unwrap_or(b - 1);
        for (j, &w) in weights.iter().enumerate() {
            if u < w {
                digit = j;
                break;
            }
            u -= w;
        }
        digits.push(digit as u8);
        index = index * b as u64 + digit as u64;
    }
    Word::new(real.base(), digits)
}
