//! The built-in weight laws.

use std::any::Any;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::{SignTable, WeightLaw};
use crate::error::{Error, Result};

/// Probability of the `+` sign that makes `E(±b^{-α}) = b^{-1}`.
pub fn plus_probability(base: u32, alpha: f64) -> f64 {
    (1.0 + (base as f64).powf(alpha - 1.0)) / 2.0
}

fn check_alpha(name: &str, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidModel(format!(
            "{name} = {alpha} must lie in (0, 1]"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "sigma = {sigma} must be finite and non-negative"
        )));
    }
    Ok(())
}

#[inline]
fn signed(positive: bool, value: f64) -> f64 {
    if positive {
        value
    } else {
        -value
    }
}

/// `|W_k| = b^{-α_k}` almost surely, random signs.
#[derive(Clone, Debug)]
pub struct Fractional {
    base: u32,
    alpha1: f64,
    alpha2: f64,
    signs: SignTable,
}

impl Fractional {
    pub fn new(base: u32, alpha1: f64, alpha2: f64, signs: SignTable) -> Result<Self> {
        crate::words::check_base(base).map_err(|e| Error::InvalidModel(e.to_string()))?;
        check_alpha("alpha1", alpha1)?;
        check_alpha("alpha2", alpha2)?;
        signs.check_marginals(
            plus_probability(base, alpha1),
            plus_probability(base, alpha2),
        )?;
        Ok(Fractional {
            base,
            alpha1,
            alpha2,
            signs,
        })
    }

    /// Signs drawn independently with the mean-fixing marginals.
    pub fn independent(base: u32, alpha1: f64, alpha2: f64) -> Result<Self> {
        let signs = SignTable::independent(
            plus_probability(base, alpha1),
            plus_probability(base, alpha2),
        )?;
        Self::new(base, alpha1, alpha2, signs)
    }

    pub fn alphas(&self) -> (f64, f64) {
        (self.alpha1, self.alpha2)
    }
}

impl WeightLaw for Fractional {
    fn kind(&self) -> &'static str {
        "fractional"
    }

    fn base(&self) -> u32 {
        self.base
    }

    fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let (s1, s2) = self.signs.draw(rng.random::<f64>());
        let b = self.base as f64;
        (
            signed(s1, b.powf(-self.alpha1)),
            signed(s2, b.powf(-self.alpha2)),
        )
    }

    fn joint_moment(&self, q1: f64, q2: f64) -> f64 {
        (self.base as f64).powf(-(q1 * self.alpha1 + q2 * self.alpha2))
    }

    fn grad_phi(&self, _q1: f64, _q2: f64) -> Option<(f64, f64)> {
        Some((self.alpha1, self.alpha2))
    }

    fn mean(&self) -> (f64, f64) {
        let (p1, p2) = self.signs.marginals();
        let b = self.base as f64;
        (
            b.powf(-self.alpha1) * (2.0 * p1 - 1.0),
            b.powf(-self.alpha2) * (2.0 * p2 - 1.0),
        )
    }

    fn identical_components(&self) -> bool {
        self.alpha1 == self.alpha2 && self.signs.is_diagonal()
    }

    fn a1_closed_form(&self) -> Option<bool> {
        // q·α_k > 1 for both k and some q ≤ 2
        Some(2.0 * self.alpha1.min(self.alpha2) > 1.0)
    }

    fn negative_moments_finite(&self) -> bool {
        true
    }

    fn fractional_exponents(&self) -> Option<(f64, f64)> {
        Some((self.alpha1, self.alpha2))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("b".into(), self.base.to_string()),
            ("alpha1".into(), format!("{:?}", self.alpha1)),
            ("alpha2".into(), format!("{:?}", self.alpha2)),
            ("signs".into(), self.signs.to_string()),
        ]
    }
}

/// `W_k = X_k · e^{σY − σ²/2}` with one shared Gaussian `Y` and `X_k = ±b^{-α}`.
#[derive(Clone, Debug)]
pub struct LognormalSigned {
    base: u32,
    alpha: f64,
    sigma: f64,
    signs: SignTable,
}

impl LognormalSigned {
    pub fn new(base: u32, alpha: f64, sigma: f64, signs: SignTable) -> Result<Self> {
        crate::words::check_base(base).map_err(|e| Error::InvalidModel(e.to_string()))?;
        check_alpha("alpha", alpha)?;
        check_sigma(sigma)?;
        let p = plus_probability(base, alpha);
        signs.check_marginals(p, p)?;
        Ok(LognormalSigned {
            base,
            alpha,
            sigma,
            signs,
        })
    }

    pub fn independent(base: u32, alpha: f64, sigma: f64) -> Result<Self> {
        let p = plus_probability(base, alpha);
        Self::new(base, alpha, sigma, SignTable::independent(p, p)?)
    }

    /// Parametrized by `β = σ²/(2 ln b)` instead of `σ`.
    pub fn with_beta(base: u32, alpha: f64, beta: f64, signs: SignTable) -> Result<Self> {
        Self::new(base, alpha, sigma_from_beta(base, beta)?, signs)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        beta_from_sigma(self.base, self.sigma)
    }
}

pub fn sigma_from_beta(base: u32, beta: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "beta = {beta} must be finite and non-negative"
        )));
    }
    Ok((2.0 * beta * (base as f64).ln()).sqrt())
}

pub fn beta_from_sigma(base: u32, sigma: f64) -> f64 {
    sigma * sigma / (2.0 * (base as f64).ln())
}

/// Closed-form admissibility of `αq − β(q² − q) > 1` for some `q ∈ (1, 2]`.
pub fn lognormal_admissible(alpha: f64, beta: f64) -> bool {
    if !(beta < 1.0 && alpha <= 1.0) {
        return false;
    }
    if beta >= 0.25 {
        2.0 * beta.sqrt() - beta < alpha
    } else {
        beta + 0.5 < alpha
    }
}

/// `e^{σ²(s² − s)/2}`, the moment of order `s` of the normalized lognormal factor.
#[inline]
fn lognormal_moment(sigma: f64, s: f64) -> f64 {
    (sigma * sigma * (s * s - s) / 2.0).exp()
}

#[inline]
fn lognormal_factor(sigma: f64, rng: &mut dyn RngCore) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let y: f64 = StandardNormal.sample(rng);
    (sigma * y - sigma * sigma / 2.0).exp()
}

impl WeightLaw for LognormalSigned {
    fn kind(&self) -> &'static str {
        "lognormal-signed"
    }

    fn base(&self) -> u32 {
        self.base
    }

    fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let (s1, s2) = self.signs.draw(rng.random::<f64>());
        let magnitude = (self.base as f64).powf(-self.alpha) * lognormal_factor(self.sigma, rng);
        (signed(s1, magnitude), signed(s2, magnitude))
    }

    fn joint_moment(&self, q1: f64, q2: f64) -> f64 {
        let s = q1 + q2;
        (self.base as f64).powf(-self.alpha * s) * lognormal_moment(self.sigma, s)
    }

    fn grad_phi(&self, q1: f64, q2: f64) -> Option<(f64, f64)> {
        let g = self.alpha - self.beta() * (2.0 * (q1 + q2) - 1.0);
        Some((g, g))
    }

    fn mean(&self) -> (f64, f64) {
        let (p1, p2) = self.signs.marginals();
        let m = (self.base as f64).powf(-self.alpha);
        (m * (2.0 * p1 - 1.0), m * (2.0 * p2 - 1.0))
    }

    fn identical_components(&self) -> bool {
        self.signs.is_diagonal()
    }

    fn a1_closed_form(&self) -> Option<bool> {
        Some(lognormal_admissible(self.alpha, self.beta()))
    }

    fn negative_moments_finite(&self) -> bool {
        true
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("b".into(), self.base.to_string()),
            ("alpha".into(), format!("{:?}", self.alpha)),
            ("sigma".into(), format!("{:?}", self.sigma)),
            ("signs".into(), self.signs.to_string()),
        ]
    }
}

/// `W₁ = X₁ · e^{σY − σ²/2}`, `W₂ = b^{-1} · e^{σY − σ²/2}`: the second
/// coordinate is increasing.
#[derive(Clone, Debug)]
pub struct Mixed {
    base: u32,
    alpha: f64,
    sigma: f64,
}

impl Mixed {
    pub fn new(base: u32, alpha: f64, sigma: f64) -> Result<Self> {
        crate::words::check_base(base).map_err(|e| Error::InvalidModel(e.to_string()))?;
        check_alpha("alpha", alpha)?;
        check_sigma(sigma)?;
        Ok(Mixed { base, alpha, sigma })
    }

    pub fn with_beta(base: u32, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(base, alpha, sigma_from_beta(base, beta)?)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        beta_from_sigma(self.base, self.sigma)
    }

    pub fn sign_marginal(&self) -> f64 {
        plus_probability(self.base, self.alpha)
    }
}

impl WeightLaw for Mixed {
    fn kind(&self) -> &'static str {
        "mixed"
    }

    fn base(&self) -> u32 {
        self.base
    }

    fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let positive = rng.random::<f64>() < self.sign_marginal();
        let factor = lognormal_factor(self.sigma, rng);
        let b = self.base as f64;
        (signed(positive, b.powf(-self.alpha) * factor), factor / b)
    }

    fn joint_moment(&self, q1: f64, q2: f64) -> f64 {
        let s = q1 + q2;
        (self.base as f64).powf(-(self.alpha * q1 + q2)) * lognormal_moment(self.sigma, s)
    }

    fn grad_phi(&self, q1: f64, q2: f64) -> Option<(f64, f64)> {
        let curvature = self.beta() * (2.0 * (q1 + q2) - 1.0);
        Some((self.alpha - curvature, 1.0 - curvature))
    }

    fn mean(&self) -> (f64, f64) {
        let b = self.base as f64;
        (
            b.powf(-self.alpha) * (2.0 * self.sign_marginal() - 1.0),
            1.0 / b,
        )
    }

    fn identical_components(&self) -> bool {
        self.alpha == 1.0
    }

    fn a1_closed_form(&self) -> Option<bool> {
        // the W₁ moment dominates since α ≤ 1
        Some(lognormal_admissible(self.alpha, self.beta()))
    }

    fn negative_moments_finite(&self) -> bool {
        true
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("b".into(), self.base.to_string()),
            ("alpha".into(), format!("{:?}", self.alpha)),
            ("sigma".into(), format!("{:?}", self.sigma)),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub w1: f64,
    pub w2: f64,
    pub probability: f64,
}

/// A finite-support law for `(W₁, W₂)`.
#[derive(Clone, Debug)]
pub struct DiscreteTable {
    base: u32,
    atoms: Vec<Atom>,
    cumulative: Vec<f64>,
}

impl DiscreteTable {
    pub fn new(base: u32, atoms: Vec<Atom>) -> Result<Self> {
        crate::words::check_base(base).map_err(|e| Error::InvalidModel(e.to_string()))?;
        if atoms.is_empty() {
            return Err(Error::InvalidModel("discrete table has no atoms".into()));
        }
        for a in &atoms {
            if !(a.probability >= 0.0) || !a.w1.is_finite() || !a.w2.is_finite() {
                return Err(Error::InvalidModel(format!("malformed atom {a:?}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        let cumulative = atoms
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a.probability;
                Some(*acc)
            })
            .collect();
        Ok(DiscreteTable {
            base,
            atoms,
            cumulative,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn support(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| a.probability > 0.0)
    }
}

/// `|x|^q` with `0^0 = 1` and `0^{q<0} = +∞`.
#[inline]
fn abs_pow(x: f64, q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else {
        x.abs().powf(q)
    }
}

impl WeightLaw for DiscreteTable {
    fn kind(&self) -> &'static str {
        "discrete"
    }

    fn base(&self) -> u32 {
        self.base
    }

    fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let u = rng.random::<f64>();
        let i = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| self.cumulative.len() - 1);
        (self.atoms[i].w1, self.atoms[i].w2)
    }

    fn joint_moment(&self, q1: f64, q2: f64) -> f64 {
        let mut total = 0.0;
        for a in self.support() {
            let (f1, f2) = (abs_pow(a.w1, q1), abs_pow(a.w2, q2));
            if f1.is_infinite() || f2.is_infinite() {
                return f64::INFINITY;
            }
            total += a.probability * f1 * f2;
        }
        total
    }

    fn grad_phi(&self, q1: f64, q2: f64) -> Option<(f64, f64)> {
        let moment = self.joint_moment(q1, q2);
        if !moment.is_finite() || moment <= 0.0 {
            return None;
        }
        let (mut d1, mut d2) = (0.0, 0.0);
        for a in self.support() {
            let weight = a.probability * abs_pow(a.w1, q1) * abs_pow(a.w2, q2);
            if weight == 0.0 {
                continue;
            }
            d1 += weight * a.w1.abs().ln();
            d2 += weight * a.w2.abs().ln();
        }
        let ln_b = (self.base as f64).ln();
        Some((-d1 / (moment * ln_b), -d2 / (moment * ln_b)))
    }

    fn mean(&self) -> (f64, f64) {
        self.support().fold((0.0, 0.0), |(m1, m2), a| {
            (m1 + a.probability * a.w1, m2 + a.probability * a.w2)
        })
    }

    fn identical_components(&self) -> bool {
        self.support().all(|a| a.w1 == a.w2)
    }

    fn negative_moments_finite(&self) -> bool {
        self.support().all(|a| a.w1 != 0.0 && a.w2 != 0.0)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn parameters(&self) -> Vec<(String, String)> {
        let mut out = vec![("b".to_string(), self.base.to_string())];
        out.extend(self.atoms.iter().map(|a| {
            (
                "atom".to_string(),
                format!("{:?} {:?} {:?}", a.w1, a.w2, a.probability),
            )
        }));
        out
    }
}
