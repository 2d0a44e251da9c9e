//! Closed-form and root-solver predictions.
//!
//! `ξ` and `ζ` are the smallest roots of `ψ(ξ) = b^{-ξ₀}` and `ψ̃(ζ) = b^{-ξ₀}`
//! with `ψ(ξ) = E|W₁|^ξ ∨ E|W₂|^ξ` and `ψ̃(ζ) = E(|W₁|^{ζ-1}|W₂|) ∨ E(|W₁||W₂|^{ζ-1})`.
//! Both are found by scanning at step [`SCAN_STEP`] and bisecting the first
//! bracket down to [`ROOT_TOLERANCE`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::{LognormalSigned, Mixed, WeightModel};

pub const SCAN_STEP: f64 = 1.0 / 512.0;
pub const Q_MAX: f64 = 4.0;
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Which expression of the image-dimension formula is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Xi,
    Zeta,
    Capped,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Xi => "xi",
            Branch::Zeta => "zeta",
            Branch::Capped => "capped",
        }
    }
}

fn check_xi0(xi0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&xi0) {
        return Err(Error::Domain(format!("xi0 = {xi0} must lie in [0, 1]")));
    }
    Ok(())
}

/// Smallest `x` in `[lo, hi]` with `f(x) = target`, given `f(lo) ≥ target`.
/// Non-finite values of `f` count as lying above the target.
fn smallest_root(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64, what: &str) -> Result<f64> {
    let above = |x: f64| {
        let v = f(x);
        v.is_nan() || v > target
    };
    if !above(lo) {
        return Ok(lo);
    }
    let steps = ((hi - lo) / SCAN_STEP).round() as usize;
    let mut prev = lo;
    for i in 1..=steps {
        let x = lo + i as f64 * SCAN_STEP;
        if !above(x) {
            let (mut a, mut c) = (prev, x);
            while c - a > ROOT_TOLERANCE {
                let mid = 0.5 * (a + c);
                if above(mid) {
                    a = mid;
                } else {
                    c = mid;
                }
            }
            return Ok(0.5 * (a + c));
        }
        prev = x;
    }
    Err(Error::NoRoot(format!(
        "{what} stays above {target} on [{lo}, {hi}]"
    )))
}

/// `ψ(ξ) = E|W₁|^ξ ∨ E|W₂|^ξ`.
pub fn psi(model: &WeightModel, xi: f64) -> f64 {
    model.max_marginal_moment(xi)
}

/// `ψ̃(ζ) = E(|W₁|^{ζ-1}|W₂|) ∨ E(|W₁||W₂|^{ζ-1})`.
pub fn psi_tilde(model: &WeightModel, zeta: f64) -> f64 {
    model.max_cross_moment(zeta)
}

pub fn solve_xi(model: &WeightModel, xi0: f64) -> Result<f64> {
    check_xi0(xi0)?;
    if xi0 == 0.0 {
        return Ok(0.0);
    }
    let target = (model.base() as f64).powf(-xi0);
    smallest_root(|x| psi(model, x), target, 0.0, Q_MAX, "ψ")
}

pub fn solve_zeta(model: &WeightModel, xi0: f64) -> Result<f64> {
    check_xi0(xi0)?;
    let target = (model.base() as f64).powf(-xi0);
    smallest_root(|z| psi_tilde(model, z), target, 0.0, Q_MAX + 1.0, "ψ̃")
}

/// `ξ* = -log_b(E|W₁| ∨ E|W₂|)`, checked to lie in `(1/2, 1]`.
pub fn xi_star(model: &WeightModel) -> Result<f64> {
    let value = -psi(model, 1.0).ln() / (model.base() as f64).ln();
    if !(value > 0.5 && value <= 1.0 + 1e-12) {
        return Err(Error::Assumption(format!(
            "xi* = {value} lies outside (1/2, 1]"
        )));
    }
    Ok(value.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImageDimension {
    pub value: f64,
    pub branch: Branch,
}

/// `ξ ∧ ζ` for distinct components, `ξ ∧ 1` for identical ones.
pub fn predicted_image_dim(model: &WeightModel, xi0: f64) -> Result<ImageDimension> {
    let xi = solve_xi(model, xi0)?;
    if model.identical_components() {
        return Ok(if xi <= 1.0 {
            ImageDimension { value: xi, branch: Branch::Xi }
        } else {
            ImageDimension { value: 1.0, branch: Branch::Capped }
        });
    }
    let zeta = solve_zeta(model, xi0)?;
    let branch = if xi0 <= xi_star(model)? { Branch::Xi } else { Branch::Zeta };
    Ok(ImageDimension {
        value: xi.min(zeta),
        branch,
    })
}

/// Smallest root of `β x² − c x + d = 0`, or `d / c` when `β = 0`.
fn smallest_quadratic_root(beta: f64, c: f64, d: f64) -> Option<f64> {
    if beta == 0.0 {
        return Some(d / c);
    }
    let disc = c * c - 4.0 * beta * d;
    if disc < 0.0 {
        return None;
    }
    // the cancellation-free form of (c − √disc) / 2β
    Some(2.0 * d / (c + disc.sqrt()))
}

/// Root of `ξ₀ − αξ = βξ(1 − ξ)`.
pub fn lognormal_xi(alpha: f64, beta: f64, xi0: f64) -> Option<f64> {
    smallest_quadratic_root(beta, alpha + beta, xi0)
}

/// Root of `ξ₀ − ζ = βζ(1 − ζ) + α − 1`.
pub fn mixed_zeta(alpha: f64, beta: f64, xi0: f64) -> Option<f64> {
    smallest_quadratic_root(beta, 1.0 + beta, xi0 + 1.0 - alpha)
}

/// Closed-form image dimension for the two laws that have one.
pub fn closed_form_image_dim(model: &WeightModel, xi0: f64) -> Option<f64> {
    if let Some(law) = model.downcast::<LognormalSigned>() {
        let xi = lognormal_xi(law.alpha(), law.beta(), xi0)?;
        return Some(if model.identical_components() { xi.min(1.0) } else { xi });
    }
    if let Some(law) = model.downcast::<Mixed>() {
        let (alpha, beta) = (law.alpha(), law.beta());
        if model.identical_components() {
            return lognormal_xi(alpha, beta, xi0).map(|xi| xi.min(1.0));
        }
        return if xi0 <= alpha {
            lognormal_xi(alpha, beta, xi0)
        } else {
            mixed_zeta(alpha, beta, xi0)
        };
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KpzRow {
    pub xi0: f64,
    pub xi: f64,
    pub zeta: f64,
    pub xi_star: f64,
    pub predicted: f64,
    pub branch: Branch,
    pub closed_form: Option<f64>,
}

/// One row per `ξ₀`; `zeta` is NaN when `ψ̃` has no root on the scan range.
pub fn kpz_curve(model: &WeightModel, grid: &[f64]) -> Result<Vec<KpzRow>> {
    let star = xi_star(model)?;
    grid.iter()
        .map(|&xi0| {
            let xi = solve_xi(model, xi0)?;
            let zeta = match solve_zeta(model, xi0) {
                Ok(z) => z,
                Err(Error::NoRoot(_)) if model.identical_components() => f64::NAN,
                Err(e) => return Err(e),
            };
            let dim = predicted_image_dim(model, xi0)?;
            Ok(KpzRow {
                xi0,
                xi,
                zeta,
                xi_star: star,
                predicted: dim.value,
                branch: dim.branch,
                closed_form: closed_form_image_dim(model, xi0),
            })
        })
        .collect()
}

/// `{0, 1/(points−1), …, 1}`.
pub fn uniform_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Config(format!("a xi0 grid needs at least 2 points, got {points}")));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 / last).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub q: (f64, f64),
    pub alpha: (f64, f64),
    pub dim: f64,
    pub in_j: bool,
}

/// `α = ∇Φ(q)` and `ξ₀ + q·α − Φ(q)`, with membership of `q` in `J(ξ₀)`.
pub fn legendre_point(model: &WeightModel, q: (f64, f64), xi0: f64) -> Result<SpectrumPoint> {
    let phi = model.phi(q.0, q.1);
    if !phi.is_finite() {
        return Err(Error::Divergence(format!("Φ{q:?} is not finite")));
    }
    let alpha = model.grad_phi(q.0, q.1)?;
    let excess = q.0 * alpha.0 + q.1 * alpha.1 - phi;
    Ok(SpectrumPoint {
        q,
        alpha,
        dim: xi0 + excess,
        in_j: excess > -xi0,
    })
}

/// Image dimension of a set of dimension `d` on which `F` has Hölder vector `α`.
pub fn restricted_image_dim(alpha: (f64, f64), d: f64, identical: bool) -> Result<f64> {
    if !(alpha.0 > 0.0 && alpha.1 > 0.0) {
        return Err(Error::Domain(format!("Hölder vector {alpha:?} must be positive")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(format!("dimension {d} must lie in [0, 1]")));
    }
    let lo = alpha.0.min(alpha.1);
    let hi = alpha.0.max(alpha.1);
    Ok(if identical {
        (d / lo).min(1.0)
    } else {
        (d / lo).min(1.0 + (d - lo) / hi)
    })
}

/// The four exponents at which the spectrum maximizers are attained, each
/// with its Legendre point and restricted image dimension. Which one wins
/// depends on realized dimensions and is left to the caller.
pub fn maximizer_candidates(model: &WeightModel, xi0: f64) -> Result<Vec<(SpectrumPoint, f64)>> {
    let xi = solve_xi(model, xi0)?;
    let mut qs = vec![(xi, 0.0), (0.0, xi)];
    if let Ok(zeta) = solve_zeta(model, xi0) {
        qs.push((zeta - 1.0, 1.0));
        qs.push((1.0, zeta - 1.0));
    }
    let identical = model.identical_components();
    qs.into_iter()
        .map(|q| {
            let p = legendre_point(model, q, xi0)?;
            let d = p.dim.clamp(0.0, 1.0);
            let image = if p.alpha.0 > 0.0 && p.alpha.1 > 0.0 {
                restricted_image_dim(p.alpha, d, identical)?
            } else {
                f64::NAN
            };
            Ok((p, image))
        })
        .collect()
}

/// `1 − α_k` for fractional laws.
pub fn predicted_levelset_dim(model: &WeightModel, k: usize) -> Result<f64> {
    let (a1, a2) = model.fractional_exponents().ok_or_else(|| {
        Error::Scope(format!(
            "level-set law holds for fractional laws, not {}",
            model.kind()
        ))
    })?;
    match k {
        0 => Ok(1.0 - a1),
        1 => Ok(1.0 - a2),
        _ => Err(Error::Domain(format!("component {k} is not 0 or 1"))),
    }
}

/// `ξ₀ / α` for fractional laws with equal exponents and distinct components.
pub fn predicted_uniform_dim(model: &WeightModel, xi0: f64) -> Result<f64> {
    check_xi0(xi0)?;
    match model.fractional_exponents() {
        Some((a1, a2)) if a1 == a2 && !model.identical_components() => Ok(xi0 / a1),
        _ => Err(Error::Scope(
            "uniform dimension law needs a fractional law with equal exponents and distinct components".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Atom, DiscreteTable, Fractional, SignTable};
    use proptest::prelude::*;

    fn fractional(a1: f64, a2: f64) -> WeightModel {
        Fractional::independent(2, a1, a2).unwrap().into()
    }

    fn lognormal(alpha: f64, beta: f64) -> WeightModel {
        let p = crate::weights::plus_probability(2, alpha);
        LognormalSigned::with_beta(2, alpha, beta, SignTable::independent(p, p).unwrap())
            .unwrap()
            .into()
    }

    fn mixed(alpha: f64, beta: f64) -> WeightModel {
        Mixed::with_beta(2, alpha, beta).unwrap().into()
    }

    fn identity() -> WeightModel {
        let signs = SignTable::coupled(1.0).unwrap();
        Fractional::new(2, 1.0, 1.0, signs).unwrap().into()
    }

    fn quadratic_oracle(alpha: f64, beta: f64, xi0: f64) -> f64 {
        let s = alpha + beta;
        (s - (s * s - 4.0 * beta * xi0).sqrt()) / (2.0 * beta)
    }

    #[test]
    fn fractional_roots_are_linear() {
        let m = fractional(0.75, 0.75);
        assert!((solve_xi(&m, 0.6).unwrap() - 0.8).abs() < 1e-10);
        assert!((solve_zeta(&m, 0.6).unwrap() - 0.8).abs() < 1e-10);
    }

    #[test]
    fn zero_xi0_gives_zero() {
        assert_eq!(solve_xi(&lognormal(0.9, 0.2), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lognormal_root_matches_quadratic() {
        let m = lognormal(1.0, 0.25);
        let xi = solve_xi(&m, 0.5).unwrap();
        assert!((xi - (5.0 - 17f64.sqrt()) / 2.0).abs() < 1e-10);
        for i in 1..=64 {
            let xi0 = i as f64 / 64.0;
            let xi = solve_xi(&m, xi0).unwrap();
            assert!((xi0 - xi - 0.25 * xi * (1.0 - xi)).abs() < 1e-8);
        }
    }

    #[test]
    fn out_of_range_xi0_is_a_domain_error() {
        assert!(matches!(solve_xi(&fractional(0.8, 0.8), 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn zeta_is_one_at_xi_star() {
        for m in [fractional(0.7, 0.9), mixed(0.8, 0.1), lognormal(0.9, 0.2)] {
            let s = xi_star(&m).unwrap();
            assert!((solve_zeta(&m, s).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_zeta_matches_piecewise_display() {
        let (alpha, beta) = (0.8, 0.1);
        let m = mixed(alpha, beta);
        for i in 0..=20 {
            let xi0 = alpha + (1.0 - alpha) * i as f64 / 20.0;
            let zeta = solve_zeta(&m, xi0).unwrap();
            let residual = xi0 - zeta - beta * zeta * (1.0 - zeta) - alpha + 1.0;
            assert!(residual.abs() < 1e-9, "{xi0}: {residual}");
        }
    }

    #[test]
    fn xi_star_examples() {
        assert!((xi_star(&fractional(0.7, 0.9)).unwrap() - 0.7).abs() < 1e-12);
        assert!((xi_star(&mixed(0.8, 0.1)).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(xi_star(&identity()).unwrap(), 1.0);
    }

    #[test]
    fn image_dim_examples() {
        let d = predicted_image_dim(&fractional(0.75, 0.75), 0.9).unwrap();
        assert!((d.value - 1.2).abs() < 1e-10);
        assert_eq!(d.branch, Branch::Zeta);

        let d = predicted_image_dim(&lognormal(0.8, 0.25), 1.0).unwrap();
        let oracle = (1.05 - (1.05f64 * 1.05 - 1.0).sqrt()) / 0.5;
        assert!((d.value - oracle).abs() < 1e-8);
        assert!((d.value - 1.459688).abs() < 1e-6);

        let signs = SignTable::coupled(crate::weights::plus_probability(2, 0.8)).unwrap();
        let same: WeightModel = Fractional::new(2, 0.8, 0.8, signs).unwrap().into();
        let d = predicted_image_dim(&same, 1.0).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.branch, Branch::Capped);
    }

    #[test]
    fn mixed_without_noise_reaches_two_minus_alpha() {
        let d = predicted_image_dim(&mixed(0.8, 0.0), 1.0).unwrap();
        assert!((d.value - 1.2).abs() < 1e-8);
    }

    #[test]
    fn closed_forms_agree_with_solver() {
        for m in [lognormal(0.8, 0.25), lognormal(1.0, 0.25), mixed(0.8, 0.1), mixed(0.9, 0.0)] {
            for row in kpz_curve(&m, &uniform_grid(65).unwrap()).unwrap() {
                let c = row.closed_form.unwrap();
                assert!((c - row.predicted).abs() < 1e-8, "{m:?} {row:?}");
            }
        }
    }

    #[test]
    fn closed_form_oracle_for_lognormal() {
        for i in 1..=10 {
            let xi0 = i as f64 / 10.0;
            let c = lognormal_xi(0.8, 0.25, xi0).unwrap();
            assert!((c - quadratic_oracle(0.8, 0.25, xi0)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_branches_meet_at_alpha() {
        let (alpha, beta) = (0.8, 0.1);
        let left = lognormal_xi(alpha, beta, alpha).unwrap();
        let right = mixed_zeta(alpha, beta, alpha).unwrap();
        assert!((left - right).abs() < 1e-12);
        assert!((left - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_examples() {
        let p = legendre_point(&fractional(0.75, 0.75), (0.3, 1.7), 0.6).unwrap();
        assert!((p.dim - 0.6).abs() < 1e-12);
        assert!(p.in_j);

        let p = legendre_point(&lognormal(0.9, 0.2), (0.0, 0.0), 0.4).unwrap();
        assert!((p.dim - 0.4).abs() < 1e-12);

        let p = legendre_point(&lognormal(1.0, 0.25), (1.0, 0.0), 1.0).unwrap();
        assert!((p.alpha.0 - 0.75).abs() < 1e-12);
        assert!((p.dim - 0.75).abs() < 1e-12);
    }

    #[test]
    fn restricted_examples() {
        let d = restricted_image_dim((0.6, 0.8), 0.5, false).unwrap();
        assert!((d - 0.5 / 0.6).abs() < 1e-12);
        let d = restricted_image_dim((0.7, 0.7), 0.4, false).unwrap();
        assert!((d - 0.4 / 0.7).abs() < 1e-12);
        let d = restricted_image_dim((0.6, 0.8), 0.5, true).unwrap();
        assert!((d - 0.5 / 0.6).abs() < 1e-12);
        assert!(matches!(
            restricted_image_dim((0.0, 0.8), 0.5, true),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn maximizer_candidates_cover_four_shapes() {
        let c = maximizer_candidates(&fractional(0.7, 0.9), 0.8).unwrap();
        assert_eq!(c.len(), 4);
        for (p, _) in &c {
            assert!((p.dim - 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn levelset_law() {
        assert_eq!(predicted_levelset_dim(&identity(), 0).unwrap(), 0.0);
        assert!((predicted_levelset_dim(&fractional(0.7, 0.55), 0).unwrap() - 0.3).abs() < 1e-12);
        assert!((predicted_levelset_dim(&fractional(0.7, 0.55), 1).unwrap() - 0.45).abs() < 1e-12);
        assert!(matches!(
            predicted_levelset_dim(&lognormal(0.9, 0.1), 0),
            Err(Error::Scope(_))
        ));
    }

    #[test]
    fn uniform_law_scope() {
        assert!((predicted_uniform_dim(&fractional(0.75, 0.75), 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(predicted_uniform_dim(&fractional(0.7, 0.75), 0.5).is_err());
    }

    #[test]
    fn discrete_table_with_zero_weight_has_finite_roots() {
        let law = DiscreteTable::new(
            2,
            vec![
                Atom { w1: 0.8, w2: 0.3, probability: 0.5 },
                Atom { w1: 0.2, w2: 0.7, probability: 0.5 },
            ],
        )
        .unwrap();
        let m: WeightModel = law.into();
        let s = xi_star(&m).unwrap();
        assert!((solve_xi(&m, s).unwrap() - 1.0).abs() < 1e-10);
    }

    fn admissible_models() -> impl Strategy<Value = WeightModel> {
        prop_oneof![
            (0.51f64..1.0, 0.51f64..1.0).prop_map(|(a, b)| fractional(a, b)),
            (0.75f64..1.0, 0.0f64..0.2).prop_map(|(a, b)| lognormal(a, b)),
            (0.75f64..1.0, 0.0f64..0.2).prop_map(|(a, b)| mixed(a, b)),
        ]
    }

    proptest! {
        #[test]
        fn root_certificate(m in admissible_models(), xi0 in 0.01f64..1.0) {
            let target = 2f64.powf(-xi0);
            let xi = solve_xi(&m, xi0).unwrap();
            prop_assert!((psi(&m, xi) - target).abs() <= 1e-10);
            let mut x = 0.0;
            while x < xi - SCAN_STEP {
                prop_assert!(psi(&m, x) > target);
                x += SCAN_STEP;
            }
        }

        #[test]
        fn regime_ordering(m in admissible_models(), t in 0.0f64..1.0) {
            let star = xi_star(&m).unwrap();
            let xi0 = t;
            let xi = solve_xi(&m, xi0).unwrap();
            let zeta = solve_zeta(&m, xi0).unwrap();
            if xi0 <= star {
                prop_assert!(xi <= zeta + 1e-9);
            } else {
                prop_assert!(xi >= zeta - 1e-9);
            }
        }

        #[test]
        fn crossover(m in admissible_models()) {
            let star = xi_star(&m).unwrap();
            let xi = solve_xi(&m, star).unwrap();
            let zeta = solve_zeta(&m, star).unwrap();
            prop_assert!((xi - zeta).abs() <= 1e-8);
        }

        #[test]
        fn image_dim_is_monotone(m in admissible_models()) {
            let mut prev = 0.0;
            for i in 0..=256 {
                let d = predicted_image_dim(&m, i as f64 / 256.0).unwrap().value;
                prop_assert!(d >= prev - 1e-9);
                prev = d;
            }
        }
    }
}
