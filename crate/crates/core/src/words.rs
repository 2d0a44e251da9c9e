//! The b-adic coding space: finite words over `{0, .., b-1}`, the intervals
//! they address and the canonical projection onto `[0, 1]`.
//!
//! Interval endpoints are kept as integers over `b^n`, so every comparison in
//! this module is exact. Real inputs are classified by an exact scaled floor of
//! the binary expansion of the `f64`, never by repeated multiplication.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported alphabet size (digits are stored as `u8`).
pub const MAX_BASE: u32 = 36;

/// A finite word over the alphabet `{0, .., base-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    base: u32,
    digits: Vec<u8>,
}

impl Word {
    pub fn empty(base: u32) -> Result<Self> {
        check_base(base)?;
        Ok(Word {
            base,
            digits: Vec::new(),
        })
    }

    pub fn new(base: u32, digits: Vec<u8>) -> Result<Self> {
        check_base(base)?;
        if let Some(&d) = digits.iter().find(|&&d| d as u32 >= base) {
            return Err(Error::Domain(format!("digit {d} is not below base {base}")));
        }
        Ok(Word { base, digits })
    }

    /// Word of length `len` whose base-`b` value is `index` (leading zeros kept).
    pub fn from_index(base: u32, len: usize, index: u64) -> Result<Self> {
        let cells = pow_checked(base, len)?;
        if index >= cells {
            return Err(Error::Domain(format!(
                "index {index} does not fit in {len} digits of base {base}"
            )));
        }
        let mut digits = vec![0u8; len];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % base as u64) as u8;
            rest /= base as u64;
        }
        Ok(Word { base, digits })
    }

    /// Parses a digit string such as `"0121"` (digits `0-9` then `a-z`).
    pub fn parse(base: u32, text: &str) -> Result<Self> {
        let digits = text
            .chars()
            .map(|c| {
                c.to_digit(MAX_BASE)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Domain(format!("'{c}' is not a digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(base, digits)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Integer value of the digit string, i.e. `π(w)·b^|w|`.
    pub fn index(&self) -> u64 {
        self.digits
            .iter()
            .fold(0u64, |acc, &d| acc * self.base as u64 + d as u64)
    }

    /// The prefix `w|_i`.
    pub fn prefix(&self, len: usize) -> Word {
        Word {
            base: self.base,
            digits: self.digits[..len.min(self.digits.len())].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.base == other.base && other.digits.starts_with(&self.digits)
    }

    /// Concatenation `w·j`.
    pub fn child(&self, digit: u8) -> Result<Word> {
        if digit as u32 >= self.base {
            return Err(Error::Domain(format!(
                "digit {digit} is not below base {}",
                self.base
            )));
        }
        let mut digits = self.digits.clone();
        digits.push(digit);
        Ok(Word {
            base: self.base,
            digits,
        })
    }

    /// The same-length word `w⁺` with `π(w⁺) = π(w) + b^{-|w|}`, or `None`
    /// when `w` is `b-1 ⋯ b-1` (including the empty word).
    pub fn successor(&self) -> Option<Word> {
        let top = (self.base - 1) as u8;
        let mut digits = self.digits.clone();
        for slot in digits.iter_mut().rev() {
            if *slot < top {
                *slot += 1;
                return Some(Word {
                    base: self.base,
                    digits,
                });
            }
            *slot = 0;
        }
        None
    }

    pub fn interval(&self) -> BadicInterval {
        interval_of(self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.digits {
            let c = char::from_digit(d as u32, MAX_BASE).unwrap_or('?');
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The half-open interval `I_w = [π(w), π(w) + b^{-|w|})`, stored as
/// `[numerator, numerator + 1) / b^|w|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadicInterval {
    pub word: Word,
    pub numerator: u64,
    pub denominator: u64,
}

impl BadicInterval {
    pub fn left(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn right(&self) -> f64 {
        (self.numerator + 1) as f64 / self.denominator as f64
    }

    pub fn length(&self) -> f64 {
        1.0 / self.denominator as f64
    }

    /// Exact membership test for a real point under the half-open convention.
    pub fn contains(&self, x: f64) -> bool {
        match scaled_floor(x, self.denominator) {
            Some(cell) => cell == self.numerator as u128,
            None => false,
        }
    }
}

pub fn interval_of(w: &Word) -> BadicInterval {
    // Words longer than what fits in u64 are rejected at construction of any
    // realization; here we saturate instead of panicking.
    let denominator = pow_checked(w.base, w.len()).unwrap_or(u64::MAX);
    BadicInterval {
        word: w.clone(),
        numerator: w.index(),
        denominator,
    }
}

/// `x|_n`: the unique word of length `n` with `x ∈ I_w`; `1|_n = (b-1)⋯(b-1)`.
pub fn word_of(x: f64, n: usize, base: u32) -> Result<Word> {
    check_base(base)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("point {x} lies outside [0, 1]")));
    }
    let cells = pow_checked(base, n)?;
    let index = if x == 1.0 {
        cells - 1
    } else {
        scaled_floor(x, cells).expect("x is finite and in [0,1)") as u64
    };
    Word::from_index(base, n, index)
}

/// `x|_n` for a rational point `x = numerator / denominator` in `[0, 1]`.
pub fn word_of_rational(numerator: u64, denominator: u64, n: usize, base: u32) -> Result<Word> {
    check_base(base)?;
    if denominator == 0 || numerator > denominator {
        return Err(Error::Domain(format!(
            "point {numerator}/{denominator} lies outside [0, 1]"
        )));
    }
    let cells = pow_checked(base, n)?;
    let index = if numerator == denominator {
        cells - 1
    } else {
        (numerator as u128 * cells as u128 / denominator as u128) as u64
    };
    Word::from_index(base, n, index)
}

/// Exact `floor(x · scale)` for finite non-negative `x`.
fn scaled_floor(x: f64, scale: u64) -> Option<u128> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    if x == 0.0 {
        return Some(0);
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let product = mantissa as u128 * scale as u128;
    if exp >= 0 {
        // x >= 2^52; never happens for points of [0, 1] but keep it total
        return product.checked_shl(exp as u32);
    }
    let shift = (-exp) as u32;
    Some(if shift >= 128 { 0 } else { product >> shift })
}

pub(crate) fn check_base(base: u32) -> Result<()> {
    if !(2..=MAX_BASE).contains(&base) {
        return Err(Error::Domain(format!(
            "base {base} outside supported range 2..={MAX_BASE}"
        )));
    }
    Ok(())
}

/// `base^exp` as `u64`, erroring on overflow.
pub fn pow_checked(base: u32, exp: usize) -> Result<u64> {
    let exp32 = u32::try_from(exp)
        .map_err(|_| Error::Domain(format!("word length {exp} too large")))?;
    (base as u64)
        .checked_pow(exp32)
        .ok_or_else(|| Error::Domain(format!("{base}^{exp} overflows 64-bit indices")))
}
