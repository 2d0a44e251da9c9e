//! Model files and the name → law registry.
//!
//! A model file is a list of `key = value` lines; `#` starts a comment. The
//! `kind` line selects the law, the remaining keys are handed to that law's
//! constructor. Keys may appear once, except `atom` which repeats:
//!
//! ```text
//! kind = fractional          # fractional | lognormal-signed | mixed | discrete
//! b = 2
//! alpha1 = 0.75              # fractional
//! alpha2 = 0.75
//! alpha = 0.8                # lognormal-signed, mixed
//! beta = 0.25                # or: sigma = ...
//! signs = independent        # independent | coupled | <pp> <pm> <mp> <mm>
//! atom = 0.8 0.3 0.5         # discrete: w1 w2 probability
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use super::laws::{plus_probability, sigma_from_beta};
use super::{Atom, DiscreteTable, Fractional, LognormalSigned, Mixed, SignTable, WeightLaw, WeightModel};
use crate::error::{Error, Result};

/// Parsed `key = value` pairs of a model file, in file order.
#[derive(Clone, Debug, Default)]
pub struct ModelParams {
    entries: Vec<(String, String)>,
}

impl ModelParams {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidModel(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key != "atom" && entries.iter().any(|(k, _)| *k == key) {
                return Err(Error::InvalidModel(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            entries.push((key, value));
        }
        Ok(ModelParams { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidModel(format!("missing key `{key}`")))
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.require(key)?)
    }

    pub fn base(&self) -> Result<u32> {
        let raw = self.require("b")?;
        raw.parse()
            .map_err(|_| Error::InvalidModel(format!("b = `{raw}` is not an integer")))
    }

    /// `sigma`, or `sigma` derived from `beta`; exactly one must be given.
    fn sigma(&self, base: u32) -> Result<f64> {
        match (self.get("sigma"), self.get("beta")) {
            (Some(s), None) => parse_f64("sigma", s),
            (None, Some(b)) => sigma_from_beta(base, parse_f64("beta", b)?),
            (None, None) => Err(Error::InvalidModel("missing `sigma` or `beta`".into())),
            (Some(_), Some(_)) => Err(Error::InvalidModel(
                "give either `sigma` or `beta`, not both".into(),
            )),
        }
    }

    fn signs(&self, p1: f64, p2: f64) -> Result<SignTable> {
        match self.get("signs").unwrap_or("independent") {
            "independent" => SignTable::independent(p1, p2),
            "coupled" => {
                if (p1 - p2).abs() > 1e-12 {
                    return Err(Error::InvalidModel(
                        "coupled signs need equal sign marginals".into(),
                    ));
                }
                SignTable::coupled(p1)
            }
            table => {
                let cells = table
                    .split_whitespace()
                    .map(|t| parse_f64("signs", t))
                    .collect::<Result<Vec<_>>>()?;
                match cells[..] {
                    [pp, pm, mp, mm] => SignTable::new(pp, pm, mp, mm),
                    _ => Err(Error::InvalidModel(format!(
                        "signs = `{table}`: expected four probabilities"
                    ))),
                }
            }
        }
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse()
        .map_err(|_| Error::InvalidModel(format!("{key} = `{raw}` is not a number")))
}

pub type Constructor = fn(&ModelParams) -> Result<Arc<dyn WeightLaw>>;

/// Weight laws by name.
#[derive(Clone)]
pub struct ModelRegistry {
    constructors: BTreeMap<&'static str, Constructor>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry {
            constructors: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register("fractional", build_fractional);
        r.register("lognormal-signed", build_lognormal);
        r.register("mixed", build_mixed);
        r.register("discrete", build_discrete);
        r
    }

    pub fn register(&mut self, name: &'static str, ctor: Constructor) {
        self.constructors.insert(name, ctor);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.constructors.keys().copied()
    }

    pub fn build(&self, params: &ModelParams) -> Result<WeightModel> {
        let kind = params.require("kind")?;
        let ctor = self.constructors.get(kind).ok_or_else(|| {
            Error::InvalidModel(format!(
                "unknown kind `{kind}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        Ok(WeightModel::from_law(ctor(params)?))
    }

    pub fn parse(&self, text: &str) -> Result<WeightModel> {
        self.build(&ModelParams::parse(text)?)
    }

    pub fn load(&self, path: &std::path::Path) -> Result<WeightModel> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
        })?;
        self.parse(&text)
    }
}

fn build_fractional(p: &ModelParams) -> Result<Arc<dyn WeightLaw>> {
    let base = p.base()?;
    let (a1, a2) = (p.number("alpha1")?, p.number("alpha2")?);
    let signs = p.signs(plus_probability(base, a1), plus_probability(base, a2))?;
    Ok(Arc::new(Fractional::new(base, a1, a2, signs)?))
}

fn build_lognormal(p: &ModelParams) -> Result<Arc<dyn WeightLaw>> {
    let base = p.base()?;
    let alpha = p.number("alpha")?;
    let prob = plus_probability(base, alpha);
    let signs = p.signs(prob, prob)?;
    Ok(Arc::new(LognormalSigned::new(base, alpha, p.sigma(base)?, signs)?))
}

fn build_mixed(p: &ModelParams) -> Result<Arc<dyn WeightLaw>> {
    let base = p.base()?;
    Ok(Arc::new(Mixed::new(base, p.number("alpha")?, p.sigma(base)?)?))
}

fn build_discrete(p: &ModelParams) -> Result<Arc<dyn WeightLaw>> {
    let base = p.base()?;
    let atoms = p
        .all("atom")
        .map(|raw| {
            let v = raw
                .split_whitespace()
                .map(|t| parse_f64("atom", t))
                .collect::<Result<Vec<_>>>()?;
            match v[..] {
                [w1, w2, probability] => Ok(Atom { w1, w2, probability }),
                _ => Err(Error::InvalidModel(format!(
                    "atom = `{raw}`: expected `w1 w2 probability`"
                ))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(DiscreteTable::new(base, atoms)?))
}
