//! Tabulated growth functions and the log helpers shared by the estimators.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};

/// How a table relates to the quantity it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Exact,
    Upper,
    Lower,
    Estimate,
    Assumed,
}

/// A growth function tabulated on `0..values.len()`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthTab {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub values: Vec<BigUint>,
    pub label: Label,
}

impl GrowthTab {
    pub fn new(values: Vec<BigUint>, label: Label) -> Self {
        GrowthTab { values, label }
    }

    pub fn from_u64s<I: IntoIterator<Item = u64>>(values: I, label: Label) -> Self {
        GrowthTab::new(values.into_iter().map(BigUint::from).collect(), label)
    }

    /// Tabulates `f(0..=n_max)`.
    pub fn tabulate(n_max: usize, label: Label, f: impl Fn(usize) -> BigUint) -> Self {
        GrowthTab::new((0..=n_max).map(f).collect(), label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest tabulated argument.
    pub fn n_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, n: usize) -> Option<&BigUint> {
        self.values.get(n)
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    /// `g(n+m) <= g(n) g(m)` for every `n, m >= 1` inside the table.
    pub fn is_submultiplicative(&self) -> bool {
        let n_max = self.n_max();
        for n in 1..=n_max {
            for m in n..=n_max - n {
                if self.values[n + m] > &self.values[n] * &self.values[m] {
                    return false;
                }
            }
        }
        true
    }

    /// Restriction to `0..=n_max`.
    pub fn truncate(&self, n_max: usize) -> GrowthTab {
        let end = (n_max + 1).min(self.values.len());
        GrowthTab::new(self.values[..end].to_vec(), self.label)
    }

    pub fn require_len(&self, need: usize) -> Result<()> {
        if self.values.len() < need {
            return Err(Error::InsufficientData {
                have: self.values.len(),
                need,
            });
        }
        Ok(())
    }
}

/// Natural logarithm of a big integer; `-inf` for zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `log2` of a big integer.
pub fn log2_big(x: &BigUint) -> f64 {
    ln_big(x) / std::f64::consts::LN_2
}

/// Approximately `ceil(exp(x))` as a big integer, exact below 2^53.
pub fn big_from_ln(x: f64) -> BigUint {
    if x <= 0.0 {
        return BigUint::one();
    }
    let log2 = x / std::f64::consts::LN_2;
    if log2 < 52.0 {
        return BigUint::from(x.exp().ceil() as u64);
    }
    let shift = log2.floor() as u64 - 52;
    let mantissa = (2f64).powf(log2 - shift as f64).ceil() as u64;
    BigUint::from(mantissa) << shift
}

/// `base^exp` for small machine bases.
pub fn pow_big(base: u64, exp: u64) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

/// Parses a decimal big integer.
pub fn parse_big(s: &str) -> Result<BigUint> {
    s.trim()
        .parse::<BigUint>()
        .map_err(|_| Error::invalid(format!("not a non-negative integer: {s:?}")))
}
