//! Oscillation moments, partition functions and Hölder exponents.

use rayon::prelude::*;
use serde::Serialize;

use super::{fit_line, DimensionEstimate};
use crate::cascade::{sample_tilted_path, CascadeRealization, TiltRule};
use crate::error::{Error, Result};
use crate::rng::{Domain, KeyedRng};
use crate::weights::WeightModel;
use crate::words::Word;

fn check_levels(real: &CascadeRealization, levels: (usize, usize)) -> Result<()> {
    if levels.1 > real.depth() {
        return Err(Error::DepthExceeded {
            requested: levels.1,
            available: real.depth(),
        });
    }
    if levels.0 >= levels.1 {
        return Err(Error::DegenerateRange(format!("level window {levels:?} is empty")));
    }
    Ok(())
}

#[inline]
fn power(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// `S_m = Σ_{|w|=m} O₁(w)^{q₁} O₂(w)^{q₂}`.
fn moment_sum(real: &CascadeRealization, q: (f64, f64), level: usize) -> Result<f64> {
    let osc = real.oscillations(level)?;
    let negative = q.0 < 0.0 || q.1 < 0.0;
    if negative && (osc.o1.contains(&0.0) || osc.o2.contains(&0.0)) {
        return Err(Error::ZeroOscillation(format!(
            "a level-{level} oscillation vanishes and q = {q:?} has a negative entry"
        )));
    }
    Ok(osc
        .o1
        .par_iter()
        .zip(&osc.o2)
        .map(|(&a, &b)| power(a, q.0) * power(b, q.1))
        .sum())
}

/// Slope of `log_b S_m` against `m`; its expectation is `1 − Φ(q)`.
pub fn partition_function(
    real: &CascadeRealization,
    q: (f64, f64),
    levels: (usize, usize),
) -> Result<DimensionEstimate> {
    check_levels(real, levels)?;
    let counts = (levels.0..=levels.1)
        .map(|m| Ok((m, moment_sum(real, q, m)?)))
        .collect::<Result<Vec<_>>>()?;
    DimensionEstimate::from_counts(counts, levels, real.base() as f64, 2)
}

/// Slope of `log_b E(O₁^{q₁} O₂^{q₂})` against the level, the expectation
/// taken over the words of each level and over `seeds`. Expected `−Φ(q)`.
pub fn oscillation_moment_scaling(
    model: &WeightModel,
    seeds: &[u64],
    depth: usize,
    q: (f64, f64),
    levels: (usize, usize),
) -> Result<DimensionEstimate> {
    if seeds.is_empty() {
        return Err(Error::Config("no seeds".into()));
    }
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let real = CascadeRealization::build(model, seed, depth)?;
            check_levels(&real, levels)?;
            (levels.0..=levels.1)
                .map(|m| Ok(moment_sum(&real, q, m)? / real.width(m) as f64))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let counts = (levels.0..=levels.1)
        .enumerate()
        .map(|(i, m)| {
            let mean = per_seed.iter().map(|v| v[i]).sum::<f64>() / seeds.len() as f64;
            (m, mean)
        })
        .collect();
    DimensionEstimate::from_counts(counts, levels, model.base() as f64, 2)
}

/// `(ĥ₁, ĥ₂)`: minus the slopes of `log_b O_k(I_m(x))` against `m ∈ [n₁, n₂]`,
/// `I_m(x)` the level-`m` prefix interval of `word`.
pub fn holder_exponent(
    real: &CascadeRealization,
    word: &Word,
    window: (usize, usize),
) -> Result<(f64, f64)> {
    check_levels(real, window)?;
    if word.len() < window.1 {
        return Err(Error::Domain(format!(
            "word of length {} is shorter than the window end {}",
            word.len(),
            window.1
        )));
    }
    let lb = (real.base() as f64).ln();
    let ms: Vec<f64> = (window.0..=window.1).map(|m| m as f64).collect();
    let mut h = [0.0; 2];
    for (k, slot) in h.iter_mut().enumerate() {
        let logs = (window.0..=window.1)
            .map(|m| {
                let o = real.oscillation_at(k, m, word.prefix(m).index() as usize);
                if o > 0.0 {
                    Ok(o.ln() / lb)
                } else {
                    Err(Error::ZeroOscillation(format!(
                        "O_{} vanishes on {}",
                        k + 1,
                        word.prefix(m)
                    )))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        *slot = -fit_line(&ms, &logs)?.slope;
    }
    Ok((h[0], h[1]))
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderSummary {
    pub q: (f64, f64),
    pub target: (f64, f64),
    pub mean: (f64, f64),
    pub stderr: (f64, f64),
    pub paths: usize,
    pub rule: String,
}

/// `count` tilted paths of full depth on `real` with their Hölder vectors.
pub fn tilted_holder_samples(
    real: &CascadeRealization,
    rule: &dyn TiltRule,
    q: (f64, f64),
    count: usize,
    window: (usize, usize),
) -> Result<Vec<(Word, (f64, f64))>> {
    let depth = real.depth();
    let chooser = rule.prepare(real, q, depth)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = KeyedRng::new(real.seed(), Domain::TiltedPath, depth as u64, i);
            let path = sample_tilted_path(real, chooser.as_ref(), depth, &mut rng)?;
            let h = holder_exponent(real, &path, window)?;
            Ok((path, h))
        })
        .collect()
}

/// Mean and standard error of Hölder vectors, next to the target `∇Φ(q)`.
pub fn summarize_holder(
    model: &WeightModel,
    rule: &dyn TiltRule,
    q: (f64, f64),
    samples: &[(f64, f64)],
) -> Result<HolderSummary> {
    let target = model.grad_phi(q.0, q.1)?;
    if samples.is_empty() {
        return Err(Error::Config("no paths requested".into()));
    }
    let n = samples.len() as f64;
    let stats = |pick: fn(&(f64, f64)) -> f64| {
        let mean = samples.iter().map(pick).sum::<f64>() / n;
        let var = samples.iter().map(|h| (pick(h) - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    };
    let (m1, s1) = stats(|h| h.0);
    let (m2, s2) = stats(|h| h.1);
    Ok(HolderSummary {
        q,
        target,
        mean: (m1, m2),
        stderr: (s1, s2),
        paths: samples.len(),
        rule: rule.name().to_string(),
    })
}

/// Mean Hölder vector over `paths_per_seed` tilted paths on each seed's realization.
pub fn tilted_holder_mean(
    model: &WeightModel,
    rule: &dyn TiltRule,
    seeds: &[u64],
    depth: usize,
    q: (f64, f64),
    paths_per_seed: usize,
    window: (usize, usize),
) -> Result<HolderSummary> {
    let mut all = Vec::with_capacity(seeds.len() * paths_per_seed);
    for &seed in seeds {
        let real = CascadeRealization::build(model, seed, depth)?;
        let samples = tilted_holder_samples(&real, rule, q, paths_per_seed, window)?;
        all.extend(samples.into_iter().map(|(_, h)| h));
    }
    summarize_holder(model, rule, q, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::TiltRegistry;
    use crate::weights::{Fractional, SignTable};

    fn identity() -> WeightModel {
        Fractional::new(2, 1.0, 1.0, SignTable::coupled(1.0).unwrap())
            .unwrap()
            .into()
    }

    #[test]
    fn identity_partition_slopes() {
        let real = CascadeRealization::build(&identity(), 0, 10).unwrap();
        let e = partition_function(&real, (1.0, 0.0), (1, 8)).unwrap();
        assert!(e.value.abs() < 1e-12);
        let e = partition_function(&real, (0.0, 0.0), (1, 8)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counting_measure_slope_is_exact_for_any_model() {
        let m: WeightModel = Fractional::independent(3, 0.7, 0.9).unwrap().into();
        let real = CascadeRealization::build(&m, 4, 7).unwrap();
        let e = partition_function(&real, (0.0, 0.0), (1, 6)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_partition_slope() {
        let m: WeightModel = Fractional::independent(2, 0.75, 0.75).unwrap().into();
        let seeds: Vec<u64> = (0..32).collect();
        let e = oscillation_moment_scaling(&m, &seeds, 14, (1.0, 1.0), (3, 10)).unwrap();
        assert!((e.value + 1.5).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn ensemble_partition_slope_is_one_minus_phi() {
        let m: WeightModel = Fractional::independent(2, 0.7, 0.9).unwrap().into();
        let reals: Vec<_> = (0..32)
            .map(|s| CascadeRealization::build(&m, s, 14).unwrap())
            .collect();
        for q in [(0.5, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let counts = (3..=10)
                .map(|l| {
                    let mean = reals.iter().map(|r| moment_sum(r, q, l).unwrap()).sum::<f64>() / 32.0;
                    (l, mean)
                })
                .collect();
            let e = DimensionEstimate::from_counts(counts, (3, 10), 2.0, 2).unwrap();
            assert!((e.value - (1.0 - m.phi(q.0, q.1))).abs() < 0.05, "{q:?} {e:?}");
        }
    }

    #[test]
    fn negative_exponent_on_zero_oscillation() {
        let signs = SignTable::coupled(1.0).unwrap();
        let m: WeightModel = Fractional::new(2, 1.0, 1.0, signs).unwrap().into();
        let real = CascadeRealization::build(&m, 0, 6).unwrap();
        assert!(partition_function(&real, (-1.0, 0.0), (1, 4)).is_ok());
        let flat = crate::weights::DiscreteTable::new(
            2,
            vec![
                crate::weights::Atom { w1: 0.0, w2: 0.5, probability: 0.5 },
                crate::weights::Atom { w1: 1.0, w2: 0.5, probability: 0.5 },
            ],
        )
        .unwrap();
        let m: WeightModel = flat.into();
        let real = CascadeRealization::build(&m, 1, 8).unwrap();
        assert!(matches!(
            partition_function(&real, (-1.0, 0.0), (1, 6)),
            Err(Error::ZeroOscillation(_))
        ));
    }

    #[test]
    fn identity_holder_is_one() {
        let real = CascadeRealization::build(&identity(), 0, 12).unwrap();
        let w = Word::parse(2, "011010011101").unwrap();
        let (h1, h2) = holder_exponent(&real, &w, (2, 12)).unwrap();
        assert!((h1 - 1.0).abs() < 1e-12 && (h2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_holder_matches_exponents() {
        let m: WeightModel = Fractional::independent(2, 0.6, 0.9).unwrap().into();
        let real = CascadeRealization::build(&m, 2, 16).unwrap();
        let rules = TiltRegistry::default();
        let s = tilted_holder_mean(&m, rules.get("normalized").unwrap().as_ref(), &[2], 16, (0.0, 0.0), 200, (3, 12))
            .unwrap();
        assert!((s.mean.0 - 0.6).abs() < 0.05 && (s.mean.1 - 0.9).abs() < 0.05, "{s:?}");
        let w = Word::from_index(2, 16, 12345).unwrap();
        assert!(holder_exponent(&real, &w, (3, 17)).is_err());
    }
}
