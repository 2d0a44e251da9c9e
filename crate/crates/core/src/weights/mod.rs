//! Laws of the weight vector `W = (W₁, W₂)`.
//!
//! Each law implements [`WeightLaw`]; a [`WeightModel`] is a shared handle to
//! one of them and adds the derived quantities every other module needs: the
//! functional `Φ(q) = -log_b E(|W₁|^{q₁}|W₂|^{q₂})`, its gradient and the check
//! of the standing assumptions (A0)–(A2). Laws are looked up by name through
//! [`ModelRegistry`] when a model file is loaded.

mod laws;
mod registry;

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use laws::{
    beta_from_sigma, lognormal_admissible, plus_probability, sigma_from_beta, Atom,
    DiscreteTable, Fractional, LognormalSigned, Mixed,
};
pub use registry::{ModelParams, ModelRegistry};

/// Step of the central finite differences used when a law has no analytic gradient.
pub const GRADIENT_STEP: f64 = 1e-5;

/// Grid used to look for an (A1) witness exponent in `(1, 2]`.
pub const A1_GRID_POINTS: usize = 512;

/// A law of `(W₁, W₂)`.
///
/// Implementations are immutable; sampling reads from an explicit stream so
/// the same law can be shared across threads.
pub trait WeightLaw: Send + Sync + fmt::Debug {
    /// Registry name, also the `kind` line of a model file.
    fn kind(&self) -> &'static str;

    fn base(&self) -> u32;

    fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64);

    /// `E(|W₁|^{q₁}|W₂|^{q₂})`, possibly `+∞`.
    fn joint_moment(&self, q1: f64, q2: f64) -> f64;

    /// Analytic `∇Φ(q)` when the law has one.
    fn grad_phi(&self, _q1: f64, _q2: f64) -> Option<(f64, f64)> {
        None
    }

    /// `(E W₁, E W₂)`.
    fn mean(&self) -> (f64, f64);

    /// Whether `P(W₁ = W₂) = 1`.
    fn identical_components(&self) -> bool;

    /// Closed-form answer to (A1), when one is known.
    fn a1_closed_form(&self) -> Option<bool> {
        None
    }

    /// (A2): some negative moment of order `s > 2` is finite.
    fn negative_moments_finite(&self) -> bool;

    /// `(α₁, α₂)` for laws with deterministic moduli `|W_k| = b^{-α_k}`.
    fn fractional_exponents(&self) -> Option<(f64, f64)> {
        None
    }

    /// Canonical `key = value` lines (without `kind`), in file order.
    fn parameters(&self) -> Vec<(String, String)>;

    fn as_any(&self) -> &dyn Any;
}

/// Joint law of the two signs, as probabilities of `(+,+), (+,−), (−,+), (−,−)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignTable {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl SignTable {
    pub fn new(pp: f64, pm: f64, mp: f64, mm: f64) -> Result<Self> {
        let cells = [pp, pm, mp, mm];
        if cells.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidModel(format!(
                "sign table {cells:?} has a negative entry"
            )));
        }
        let total: f64 = cells.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "sign table sums to {total}, not 1"
            )));
        }
        Ok(SignTable { pp, pm, mp, mm })
    }

    /// Independent signs with `P(+)` equal to `p1` and `p2`.
    pub fn independent(p1: f64, p2: f64) -> Result<Self> {
        Self::new(
            p1 * p2,
            p1 * (1.0 - p2),
            (1.0 - p1) * p2,
            (1.0 - p1) * (1.0 - p2),
        )
    }

    /// Both signs equal, `P(+) = p`.
    pub fn coupled(p: f64) -> Result<Self> {
        Self::new(p, 0.0, 0.0, 1.0 - p)
    }

    pub fn marginals(&self) -> (f64, f64) {
        (self.pp + self.pm, self.pp + self.mp)
    }

    pub fn is_diagonal(&self) -> bool {
        self.pm == 0.0 && self.mp == 0.0
    }

    /// The same table with both signs flipped.
    pub fn flipped(&self) -> SignTable {
        SignTable {
            pp: self.mm,
            pm: self.mp,
            mp: self.pm,
            mm: self.pp,
        }
    }

    pub(crate) fn check_marginals(&self, p1: f64, p2: f64) -> Result<()> {
        let (m1, m2) = self.marginals();
        if (m1 - p1).abs() > 1e-12 || (m2 - p2).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "sign marginals ({m1}, {m2}) differ from the mean-fixing values ({p1}, {p2})"
            )));
        }
        Ok(())
    }

    /// Maps a uniform draw to a pair of signs (`true` is `+`).
    #[inline]
    pub fn draw(&self, u: f64) -> (bool, bool) {
        if u < self.pp {
            (true, true)
        } else if u < self.pp + self.pm {
            (true, false)
        } else if u < self.pp + self.pm + self.mp {
            (false, true)
        } else {
            (false, false)
        }
    }
}

impl fmt::Display for SignTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} {:?} {:?} {:?}",
            self.pp, self.pm, self.mp, self.mm
        )
    }
}

/// Shared, immutable handle to a weight law.
#[derive(Clone, Debug)]
pub struct WeightModel {
    law: Arc<dyn WeightLaw>,
}

impl<L: WeightLaw + 'static> From<L> for WeightModel {
    fn from(law: L) -> Self {
        WeightModel { law: Arc::new(law) }
    }
}

impl WeightModel {
    pub fn from_law(law: Arc<dyn WeightLaw>) -> Self {
        WeightModel { law }
    }

    pub fn law(&self) -> &dyn WeightLaw {
        self.law.as_ref()
    }

    pub fn kind(&self) -> &'static str {
        self.law.kind()
    }

    pub fn base(&self) -> u32 {
        self.law.base()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        self.law.sample(rng)
    }

    pub fn joint_moment(&self, q1: f64, q2: f64) -> f64 {
        self.law.joint_moment(q1, q2)
    }

    /// `Φ(q₁, q₂)`, `-∞` when the moment diverges.
    pub fn phi(&self, q1: f64, q2: f64) -> f64 {
        let m = self.joint_moment(q1, q2);
        if m.is_infinite() {
            f64::NEG_INFINITY
        } else {
            -m.ln() / (self.base() as f64).ln()
        }
    }

    /// `∇Φ(q)`: analytic when available, central differences otherwise.
    pub fn grad_phi(&self, q1: f64, q2: f64) -> Result<(f64, f64)> {
        if !self.phi(q1, q2).is_finite() {
            return Err(Error::Divergence(format!("Φ({q1}, {q2}) is not finite")));
        }
        if let Some(g) = self.law.grad_phi(q1, q2) {
            return Ok(g);
        }
        let h = GRADIENT_STEP;
        let stencil = [
            self.phi(q1 + h, q2),
            self.phi(q1 - h, q2),
            self.phi(q1, q2 + h),
            self.phi(q1, q2 - h),
        ];
        if stencil.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "Φ is infinite next to ({q1}, {q2})"
            )));
        }
        Ok((
            (stencil[0] - stencil[1]) / (2.0 * h),
            (stencil[2] - stencil[3]) / (2.0 * h),
        ))
    }

    /// `E(|W₁|^p) ∨ E(|W₂|^p)`.
    pub fn max_marginal_moment(&self, p: f64) -> f64 {
        self.joint_moment(p, 0.0).max(self.joint_moment(0.0, p))
    }

    /// `E(|W₁|^{p-1}|W₂|) ∨ E(|W₁||W₂|^{p-1})`.
    pub fn max_cross_moment(&self, p: f64) -> f64 {
        self.joint_moment(p - 1.0, 1.0)
            .max(self.joint_moment(1.0, p - 1.0))
    }

    pub fn identical_components(&self) -> bool {
        self.law.identical_components()
    }

    pub fn fractional_exponents(&self) -> Option<(f64, f64)> {
        self.law.fractional_exponents()
    }

    /// The concrete law, when it is an `L`.
    pub fn downcast<L: WeightLaw + 'static>(&self) -> Option<&L> {
        self.law.as_any().downcast_ref::<L>()
    }

    /// Canonical model-file text; parsing it back yields the same law.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("kind = {}\n", self.kind());
        for (k, v) in self.law.parameters() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Short hex digest of the canonical model text.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_file_string().as_bytes());
        hex::encode(&hash[..8])
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        check_assumptions(self)
    }
}

/// Outcome of checking (A0)–(A2) for a model.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub kind: String,
    pub base: u32,
    pub mean1: f64,
    pub mean2: f64,
    pub a0_ok: bool,
    pub a1_ok: bool,
    /// Exponent `q ∈ (1, 2]` with `E(|W₁|^q) ∨ E(|W₂|^q) < b^{-1}`.
    pub a1_witness: Option<f64>,
    pub a1_closed_form: Option<bool>,
    pub a2_ok: bool,
    pub a2_witness: Option<f64>,
    pub identical_components: bool,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.a0_ok && self.a1_ok && self.a2_ok
    }
}

fn check_assumptions(model: &WeightModel) -> AssumptionReport {
    let b = model.base() as f64;
    let target = 1.0 / b;
    let mut notes = Vec::new();

    let (mean1, mean2) = model.law.mean();
    let a0_ok = (mean1 - target).abs() <= 1e-12 && (mean2 - target).abs() <= 1e-12;
    if !a0_ok {
        notes.push(format!("E(W) = ({mean1}, {mean2}) but 1/b = {target}"));
    }

    let (scan_ok, witness) = scan_a1(model);
    let closed = model.law.a1_closed_form();
    let a1_ok = match closed {
        Some(c) => {
            if c != scan_ok {
                notes.push(format!(
                    "(A1) grid scan says {scan_ok}, closed form says {c}; closed form used"
                ));
            }
            c
        }
        None => scan_ok,
    };
    if !a1_ok {
        notes.push("no q in (1,2] with max_k E|W_k|^q < 1/b".into());
    }

    let a2_ok = model.law.negative_moments_finite();
    if !a2_ok {
        notes.push("some weight component has an atom at 0".into());
    }

    AssumptionReport {
        kind: model.kind().to_string(),
        base: model.base(),
        mean1,
        mean2,
        a0_ok,
        a1_ok,
        a1_witness: if scan_ok { witness } else { None },
        a1_closed_form: closed,
        a2_ok,
        a2_witness: a2_ok.then_some(3.0),
        identical_components: model.identical_components(),
        notes,
    }
}

/// Grid search for an (A1) witness, refined locally by golden-section search
/// around the best grid point.
fn scan_a1(model: &WeightModel) -> (bool, Option<f64>) {
    let target = 1.0 / model.base() as f64;
    let f = |q: f64| model.max_marginal_moment(q);
    let step = 1.0 / A1_GRID_POINTS as f64;
    let mut best_q = 2.0;
    let mut best = f64::INFINITY;
    for i in 1..=A1_GRID_POINTS {
        let q = 1.0 + i as f64 * step;
        let v = f(q);
        if v < best {
            best = v;
            best_q = q;
        }
    }
    if best < target {
        return (true, Some(best_q));
    }
    let (mut lo, mut hi) = ((best_q - step).max(1.0), (best_q + step).min(2.0));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - ratio * (hi - lo);
        let c = lo + ratio * (hi - lo);
        if f(a) < f(c) {
            hi = c;
        } else {
            lo = a;
        }
    }
    let q = (lo + hi) / 2.0;
    if q > 1.0 && f(q) < target {
        (true, Some(q))
    } else {
        (false, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;
    use proptest::prelude::*;

    fn lognormal(alpha: f64, beta: f64) -> WeightModel {
        LognormalSigned::with_beta(
            2,
            alpha,
            beta,
            SignTable::independent(plus_probability(2, alpha), plus_probability(2, alpha)).unwrap(),
        )
        .unwrap()
        .into()
    }

    fn two_atom() -> WeightModel {
        DiscreteTable::new(
            2,
            vec![
                Atom { w1: 0.8, w2: 0.3, probability: 0.5 },
                Atom { w1: 0.2, w2: 0.7, probability: 0.5 },
            ],
        )
        .unwrap()
        .into()
    }

    #[test]
    fn deterministic_samples() {
        let identity: WeightModel = Fractional::new(2, 1.0, 1.0, SignTable::coupled(1.0).unwrap())
            .unwrap()
            .into();
        let mut rng = KeyedRng::node(3, 1, 0);
        assert_eq!(identity.sample(&mut rng), (0.5, 0.5));

        let single: WeightModel = DiscreteTable::new(
            2,
            vec![Atom { w1: 0.3, w2: 0.4, probability: 1.0 }],
        )
        .unwrap()
        .into();
        assert_eq!(single.sample(&mut rng), (0.3, 0.4));

        let flat = lognormal(1.0, 0.0);
        for i in 0..32 {
            let (a, b) = flat.sample(&mut KeyedRng::node(9, 2, i));
            assert_eq!((a.abs(), b.abs()), (0.5, 0.5));
        }
    }

    #[test]
    fn moment_examples() {
        let frac: WeightModel = Fractional::independent(2, 0.75, 0.75).unwrap().into();
        assert!((frac.joint_moment(1.0, 0.0) - 0.594_603_557_501_360_5).abs() < 1e-15);

        let m = lognormal(1.0, 0.25);
        let sigma = sigma_from_beta(2, 0.25).unwrap();
        for xi in [0.3, 0.7, 1.4] {
            let expected = 2f64.powf(-xi) * (sigma * sigma * (xi * xi - xi) / 2.0).exp();
            assert!((m.joint_moment(xi, 0.0) - expected).abs() < 1e-14);
        }
        for model in [frac, m, two_atom()] {
            assert_eq!(model.joint_moment(0.0, 0.0), 1.0);
            assert_eq!(model.phi(0.0, 0.0), 0.0);
        }
    }

    #[test]
    fn phi_closed_forms() {
        let frac: WeightModel = Fractional::independent(3, 0.6, 0.9).unwrap().into();
        for (q1, q2) in [(0.5, -1.0), (2.0, 3.0), (-0.7, 0.1)] {
            assert!((frac.phi(q1, q2) - (0.6 * q1 + 0.9 * q2)).abs() < 1e-12);
        }
        let (alpha, beta) = (0.9, 0.2);
        let m = lognormal(alpha, beta);
        for (q1, q2) in [(0.5, 0.5), (1.0, 0.0), (-0.3, 1.2)] {
            let s: f64 = q1 + q2;
            let expected = alpha * s - beta * (s * s - s);
            assert!((m.phi(q1, q2) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_examples() {
        let frac: WeightModel = Fractional::independent(2, 0.6, 0.8).unwrap().into();
        assert_eq!(frac.grad_phi(3.0, -2.0).unwrap(), (0.6, 0.8));

        let g = lognormal(1.0, 0.25).grad_phi(0.5, 0.5).unwrap();
        assert!((g.0 - 0.75).abs() < 1e-12 && (g.1 - 0.75).abs() < 1e-12);

        let single: WeightModel = DiscreteTable::new(
            2,
            vec![Atom { w1: 0.3, w2: 0.4, probability: 1.0 }],
        )
        .unwrap()
        .into();
        let g = single.grad_phi(1.3, -0.4).unwrap();
        assert!((g.0 + 0.3f64.ln() / 2f64.ln()).abs() < 1e-12);
        assert!((g.1 + 0.4f64.ln() / 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let m = two_atom();
        for (q1, q2) in [(1.0, 1.0), (0.3, -0.5), (2.0, 0.0)] {
            let analytic = m.grad_phi(q1, q2).unwrap();
            let h = GRADIENT_STEP;
            let fd = (
                (m.phi(q1 + h, q2) - m.phi(q1 - h, q2)) / (2.0 * h),
                (m.phi(q1, q2 + h) - m.phi(q1, q2 - h)) / (2.0 * h),
            );
            assert!((analytic.0 - fd.0).abs() < 1e-8);
            assert!((analytic.1 - fd.1).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_atoms_give_infinite_moments() {
        let m: WeightModel = DiscreteTable::new(
            2,
            vec![
                Atom { w1: 0.0, w2: 0.5, probability: 0.5 },
                Atom { w1: 1.0, w2: 0.5, probability: 0.5 },
            ],
        )
        .unwrap()
        .into();
        assert_eq!(m.joint_moment(-1.0, 0.0), f64::INFINITY);
        assert_eq!(m.phi(-1.0, 1.0), f64::NEG_INFINITY);
        assert!(matches!(m.grad_phi(-1.0, 0.0), Err(Error::Divergence(_))));
        assert_eq!(m.joint_moment(0.0, 1.0), 0.5);
        let report = m.check_assumptions();
        assert!(report.a0_ok && !report.a2_ok);
    }

    #[test]
    fn assumption_examples() {
        let ok = lognormal(0.8, 0.25).check_assumptions();
        assert!(ok.a1_ok && ok.a0_ok && ok.a2_ok, "{ok:?}");
        assert_eq!(ok.a1_closed_form, Some(true));
        assert!(ok.notes.is_empty(), "{:?}", ok.notes);

        let bad = lognormal(0.7, 0.25).check_assumptions();
        assert!(!bad.a1_ok);
        assert!(bad.a1_witness.is_none());

        let frac: WeightModel = Fractional::independent(2, 0.75, 0.75).unwrap().into();
        let r = frac.check_assumptions();
        assert!(r.all_ok());
        let q = r.a1_witness.unwrap();
        assert!(q > 1.0 && q <= 2.0 && q * 0.75 > 1.0);

        let r = two_atom().check_assumptions();
        assert!(r.all_ok(), "{r:?}");
        assert!(!r.identical_components);
    }

    #[test]
    fn a1_grid_agrees_with_closed_form_across_parameters() {
        for ai in 0..40 {
            for bi in 0..40 {
                let alpha = 0.3 + ai as f64 * 0.0175 + 1e-4;
                let beta = bi as f64 * 0.024 + 1e-4;
                let m = lognormal(alpha.min(1.0), beta);
                let r = m.check_assumptions();
                // points within grid resolution of the boundary may legitimately differ
                let margin = alpha.min(1.0) * 2.0 - beta * 2.0 - 1.0;
                if margin.abs() > 1e-3 && (alpha + beta - 2.0 * beta.sqrt()).abs() > 1e-3 {
                    assert!(r.notes.iter().all(|n| !n.contains("grid scan")), "{alpha} {beta}: {:?}", r.notes);
                }
            }
        }
    }

    #[test]
    fn identical_component_flags() {
        let coupled: WeightModel = Fractional::new(
            2,
            0.7,
            0.7,
            SignTable::coupled(plus_probability(2, 0.7)).unwrap(),
        )
        .unwrap()
        .into();
        assert!(coupled.identical_components());
        let indep: WeightModel = Fractional::independent(2, 0.7, 0.7).unwrap().into();
        assert!(!indep.identical_components());
        assert!(lognormal(1.0, 0.1).identical_components());
        assert!(!Mixed::with_beta(2, 0.8, 0.1).unwrap().identical_components());
        assert!(Mixed::with_beta(2, 1.0, 0.1).unwrap().identical_components());
    }

    #[test]
    fn sign_marginals_are_enforced() {
        assert!(Fractional::new(2, 0.75, 0.75, SignTable::independent(0.5, 0.5).unwrap()).is_err());
        assert!(SignTable::new(0.5, 0.5, 0.5, -0.5).is_err());
    }

    #[test]
    fn monte_carlo_means_match_a0() {
        let models: Vec<WeightModel> = vec![
            Fractional::independent(2, 0.75, 0.6).unwrap().into(),
            lognormal(0.8, 0.25),
            Mixed::with_beta(3, 0.8, 0.1).unwrap().into(),
            two_atom(),
        ];
        let draws = 100_000u64;
        for model in models {
            let b = model.base() as f64;
            let (mut s1, mut s2, mut ss1, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..draws {
                let (w1, w2) = model.sample(&mut KeyedRng::node(2024, 1, i));
                s1 += w1;
                s2 += w2;
                ss1 += w1 * w1;
                ss2 += w2 * w2;
            }
            let n = draws as f64;
            for (s, ss) in [(s1, ss1), (s2, ss2)] {
                let mean = s / n;
                let sd = (ss / n - mean * mean).sqrt();
                assert!(
                    (mean - 1.0 / b).abs() <= 4.0 * sd / n.sqrt(),
                    "{}: mean {mean}",
                    model.kind()
                );
            }
        }
    }

    #[test]
    fn discretized_lognormal_matches_closed_form() {
        // Gauss-Hermite-free discretization: midpoint rule on a fine normal grid
        let (alpha, beta) = (0.9, 0.15);
        let sigma = sigma_from_beta(2, beta).unwrap();
        let n = 4001;
        let (lo, hi) = (-8.0, 8.0);
        let dy = (hi - lo) / n as f64;
        let mut atoms = Vec::with_capacity(n);
        let mut mass = 0.0;
        let p = plus_probability(2, alpha);
        for i in 0..n {
            let y = lo + (i as f64 + 0.5) * dy;
            let density = (-y * y / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() * dy;
            mass += density;
            let v = 2f64.powf(-alpha) * (sigma * y - sigma * sigma / 2.0).exp();
            atoms.push(Atom { w1: v * (2.0 * p - 1.0), w2: v, probability: density });
        }
        for a in &mut atoms {
            a.probability /= mass;
        }
        let table: WeightModel = DiscreteTable::new(2, atoms).unwrap().into();
        let closed = lognormal(alpha, beta);
        for (q1, q2) in [(0.0, 1.0), (0.0, 2.0), (0.0, 0.5), (0.0, 1.5)] {
            let a = table.joint_moment(q1, q2);
            let b = closed.joint_moment(q1, q2);
            assert!((a - b).abs() / b < 1e-3, "{q1},{q2}: {a} vs {b}");
        }
    }

    fn arb_model() -> impl Strategy<Value = WeightModel> {
        prop_oneof![
            (0.51f64..1.0, 0.51f64..1.0)
                .prop_map(|(a1, a2)| Fractional::independent(2, a1, a2).unwrap().into()),
            (0.7f64..1.0, 0.0f64..0.2).prop_map(|(a, b)| lognormal(a, b)),
            (0.7f64..1.0, 0.0f64..0.2)
                .prop_map(|(a, b)| Mixed::with_beta(2, a, b).unwrap().into()),
            (0.05f64..0.45, 0.05f64..0.45).prop_map(|(x, y)| {
                DiscreteTable::new(
                    2,
                    vec![
                        Atom { w1: 0.5 + x, w2: 0.5 - y, probability: 0.5 },
                        Atom { w1: 0.5 - x, w2: 0.5 + y, probability: 0.5 },
                    ],
                )
                .unwrap()
                .into()
            }),
        ]
    }

    proptest! {
        #[test]
        fn phi_is_concave(model in arb_model(),
                          a in (-2.0f64..3.0, -2.0f64..3.0),
                          c in (-2.0f64..3.0, -2.0f64..3.0)) {
            let mid = model.phi((a.0 + c.0) / 2.0, (a.1 + c.1) / 2.0);
            let chord = (model.phi(a.0, a.1) + model.phi(c.0, c.1)) / 2.0;
            prop_assert!(mid >= chord - 1e-12, "{mid} < {chord}");
        }

        #[test]
        fn lemma_one_ordering(model in arb_model(), p in 0.0f64..3.0) {
            let phi = model.max_marginal_moment(p);
            let phi_tilde = model.max_cross_moment(p);
            if p <= 1.0 {
                prop_assert!(phi <= phi_tilde * (1.0 + 1e-12), "p={p}: {phi} > {phi_tilde}");
            } else {
                prop_assert!(phi >= phi_tilde * (1.0 - 1e-12), "p={p}: {phi} < {phi_tilde}");
            }
        }

        #[test]
        fn moments_ignore_signs(a in 0.51f64..1.0, q1 in -2.0f64..2.0, q2 in -2.0f64..2.0) {
            let p = plus_probability(2, a);
            let indep = SignTable::independent(p, p).unwrap();
            let coupled = SignTable::coupled(p).unwrap();
            let m1 = LognormalSigned::new(2, a, 0.3, indep).unwrap();
            let m2 = LognormalSigned::new(2, a, 0.3, coupled).unwrap();
            prop_assert_eq!(m1.joint_moment(q1, q2), m2.joint_moment(q1, q2));
            // flipping every sign only changes the mean, never a moment of |W|
            let flipped = DiscreteTable::new(2, vec![
                Atom { w1: -0.8, w2: -0.3, probability: 0.5 },
                Atom { w1: -0.2, w2: -0.7, probability: 0.5 },
            ]).unwrap();
            let orig = DiscreteTable::new(2, vec![
                Atom { w1: 0.8, w2: 0.3, probability: 0.5 },
                Atom { w1: 0.2, w2: 0.7, probability: 0.5 },
            ]).unwrap();
            prop_assert_eq!(flipped.joint_moment(q1, q2), orig.joint_moment(q1, q2));
            prop_assert_eq!(indep.flipped().marginals().0, 1.0 - p);
        }
    }
}
