//! Truncated power series with big-integer coefficients: Euler products,
//! the coefficient bounds used for enveloping algebras, the dyadic profile
//! that alternates between squaring and holding, and q-dimension estimates.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::growth::{ln_big, log2_big, pow_big, GrowthTab, Label};

/// `a_0 + a_1 t + ... + a_N t^N`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub coeffs: Vec<BigUint>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<BigUint>) -> Self {
        assert!(!coeffs.is_empty(), "a series keeps at least its constant term");
        TruncatedSeries { coeffs }
    }

    pub fn from_u64s(coeffs: &[u64]) -> Self {
        TruncatedSeries::new(coeffs.iter().map(|&c| BigUint::from(c)).collect())
    }

    pub fn one(degree: usize) -> Self {
        let mut coeffs = vec![BigUint::zero(); degree + 1];
        coeffs[0] = BigUint::one();
        TruncatedSeries { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> BigUint {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Schoolbook product truncated to the smaller degree.
    pub fn mul(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let n = self.degree().min(other.degree());
        let mut out = vec![BigUint::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        TruncatedSeries { coeffs: out }
    }

    /// Partial sums `a_0 + ... + a_n`.
    pub fn partial_sums(&self) -> Vec<BigUint> {
        let mut acc = BigUint::zero();
        self.coeffs
            .iter()
            .map(|c| {
                acc += c;
                acc.clone()
            })
            .collect()
    }
}

/// Degree-`n` truncation of `prod_{k=1}^{n} (1 - t^k)^{-b_k}`, where `b[k-1] = b_k`.
///
/// Uses the logarithmic-derivative recurrence `n a_n = sum_k c_k a_{n-k}` with
/// `c_k = sum_{d | k} d b_d`; every division is exact.
pub fn euler_product(b: &[u64], n: usize) -> Result<TruncatedSeries> {
    if n == 0 {
        return Err(Error::invalid("series degree must be positive"));
    }
    let bk = |k: usize| -> u128 { b.get(k - 1).copied().map(u128::from).unwrap_or(0) };
    let mut c = vec![0u128; n + 1];
    for d in 1..=n {
        let w = d as u128 * bk(d);
        if w == 0 {
            continue;
        }
        let mut k = d;
        while k <= n {
            c[k] += w;
            k += d;
        }
    }
    let mut a: Vec<BigUint> = Vec::with_capacity(n + 1);
    a.push(BigUint::one());
    for m in 1..=n {
        let mut acc = BigUint::zero();
        for k in 1..=m {
            if c[k] != 0 {
                acc += &a[m - k] * c[k];
            }
        }
        let (q, r) = acc.div_rem(&BigUint::from(m));
        debug_assert!(r.is_zero());
        a.push(q);
    }
    Ok(TruncatedSeries { coeffs: a })
}

/// `(1 - t^step)^{-e}` truncated at `degree`, via binomial coefficients.
pub fn geometric_power(step: usize, e: u64, degree: usize) -> TruncatedSeries {
    let mut out = vec![BigUint::zero(); degree + 1];
    let mut binom = BigUint::one();
    let mut j: u64 = 0;
    while (j as usize) * step <= degree {
        out[j as usize * step] = binom.clone();
        if e == 0 {
            break;
        }
        // C(e + j, j + 1) = C(e + j - 1, j) * (e + j) / (j + 1)
        binom = binom * (e + j) / (j + 1);
        j += 1;
    }
    TruncatedSeries { coeffs: out }
}

/// The same product as [`euler_product`], multiplied out factor by factor.
pub fn euler_product_by_convolution(b: &[u64], n: usize) -> Result<TruncatedSeries> {
    if n == 0 {
        return Err(Error::invalid("series degree must be positive"));
    }
    let mut acc = TruncatedSeries::one(n);
    for (k, &e) in b.iter().enumerate().take(n) {
        if e > 0 {
            acc = acc.mul(&geometric_power(k + 1, e, n));
        }
    }
    Ok(acc)
}

/// Outcome of one bullet of the coefficient lemma.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Bullet {
    Holds {
        #[serde_as(as = "DisplayFromStr")]
        lhs: BigUint,
        #[serde_as(as = "DisplayFromStr")]
        rhs: BigUint,
    },
    Fails {
        #[serde_as(as = "DisplayFromStr")]
        lhs: BigUint,
        #[serde_as(as = "DisplayFromStr")]
        rhs: BigUint,
    },
    HypothesisNotMet,
}

impl Bullet {
    fn compare(lhs: BigUint, rhs: BigUint, ok: bool) -> Bullet {
        if ok {
            Bullet::Holds { lhs, rhs }
        } else {
            Bullet::Fails { lhs, rhs }
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self, Bullet::Fails { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesLemmaReport {
    /// `coeff_R(fg) >= coeff_R(f)` when `g_0 > 0`.
    pub domination: Bullet,
    /// `coeff_R(fg) <= T * sum_{k<=R} g_k` when `f_k <= T` for `k <= R`.
    pub sum_bound: Bullet,
    /// `coeff_k prod (1 - t^i)^{-d_i} <= R^{sum d}` for every `k <= R`; the worst `k` is reported.
    pub product_bound: Bullet,
}

impl SeriesLemmaReport {
    pub fn all_hold(&self) -> bool {
        !(self.domination.failed() || self.sum_bound.failed() || self.product_bound.failed())
    }
}

/// Checks the three coefficient bounds on concrete inputs.
pub fn check_series_lemma(
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    r: usize,
    t: &BigUint,
    d: &[u64],
) -> Result<SeriesLemmaReport> {
    if r > f.degree().min(g.degree()) {
        return Err(Error::invalid(format!("R = {r} exceeds the series degrees")));
    }
    let fg = f.mul(g);
    let lhs = fg.coeff(r);

    let domination = if g.coeff(0).is_zero() {
        Bullet::HypothesisNotMet
    } else {
        let rhs = f.coeff(r);
        let ok = lhs >= rhs;
        Bullet::compare(lhs.clone(), rhs, ok)
    };

    let sum_bound = if (0..=r).any(|k| &f.coeff(k) > t) {
        Bullet::HypothesisNotMet
    } else {
        let s: BigUint = (0..=r).map(|k| g.coeff(k)).sum();
        let rhs = t * s;
        let ok = lhs <= rhs;
        Bullet::compare(lhs, rhs, ok)
    };

    let product_bound = if r == 0 && d.is_empty() {
        Bullet::Holds {
            lhs: BigUint::one(),
            rhs: BigUint::one(),
        }
    } else {
        let p = euler_product_by_convolution(d, r.max(1))?;
        let total: u64 = d.iter().sum();
        let rhs = pow_big(r as u64, total);
        let worst = (0..=r).map(|k| p.coeff(k)).max().unwrap_or_default();
        let ok = worst <= rhs;
        Bullet::compare(worst, rhs, ok)
    };

    Ok(SeriesLemmaReport {
        domination,
        sum_bound,
        product_bound,
    })
}

/// How `g(2^{k+1})` is obtained from `g(2^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Square,
    Hold,
}

/// One epoch `n_i <= n'_i <= m_i <= m'_i` of exponents of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub n: usize,
    pub n_prime: usize,
    pub m: usize,
    pub m_prime: usize,
}

/// `g(2^k)` for `k = 0..=K` with regime marks and the extension rule to all of ℕ.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGProfile {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub values: Vec<BigUint>,
    /// `regimes[k]` takes `g(2^k)` to `g(2^{k+1})`.
    pub regimes: Vec<Regime>,
    pub epochs: Vec<Epoch>,
    /// `g(2^k) >= f2(2^k)` on every `[n_i, n'_i]` inside the table.
    pub dominates_on_up_intervals: bool,
    /// `g(2^k) <= log2 k` on every `[m_i, m'_i]` inside the table.
    pub small_on_hold_intervals: bool,
}

impl DyadicGProfile {
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Squaring cap and divisibility along the table.
    pub fn invariants_hold(&self) -> bool {
        self.values.windows(2).all(|w| {
            let sq = &w[0] * &w[0];
            w[1] <= sq && (&w[1] % &w[0]).is_zero()
        }) && self.values.windows(2).all(|w| w[0] <= w[1])
    }

    fn in_up_interval(&self, n: u64) -> bool {
        self.epochs
            .iter()
            .any(|e| n >= 1u64 << e.n.min(63) && n <= 1u64 << e.n_prime.min(63))
    }

    /// Extension to `1 <= n <= 2^K`: ceiling on the up-intervals, floor elsewhere.
    pub fn eval(&self, n: u64) -> Option<BigUint> {
        if n == 0 {
            return None;
        }
        let floor = 63 - n.leading_zeros() as usize;
        let ceil = if n.is_power_of_two() { floor } else { floor + 1 };
        let k = if self.in_up_interval(n) { ceil } else { floor };
        self.values.get(k).cloned()
    }
}

fn f2_dominated(f2: &dyn Fn(u64) -> BigUint, base_log2: f64, lo: usize, hi: usize) -> bool {
    // f2(2^s) <= B^{2^s}, where log2 B = base_log2.
    (lo..=hi).all(|s| log2_big(&f2(1u64 << s)) <= base_log2 * (1u64 << s) as f64 + 1e-9)
}

/// The alternating square/hold profile.
///
/// With `epochs = None` the epochs are chosen minimally: `n_1` is the least
/// `r >= 2` beyond which `f2(2^s) <= 2^{2^s}` on the table, `n'_i = n_i + 1`,
/// `m_i = max(n'_i + 1, 2^c)` with `c = g(2^{n'_i})`, `m'_i = m_i + 1`, and
/// `n_{i+1}` is the least exponent after `m'_i` beyond which
/// `f2(2^s) <= (M^{1/2^{m'_i}})^{2^s}` with `M = g(2^{m'_i})`.
pub fn build_lemdom_profile(
    f2: &dyn Fn(u64) -> BigUint,
    k_max: usize,
    epochs: Option<Vec<Epoch>>,
) -> Result<DyadicGProfile> {
    if k_max == 0 || k_max > 62 {
        return Err(Error::invalid("k_max must lie in 1..=62"));
    }
    let epochs = match epochs {
        Some(e) => {
            let flat: Vec<usize> = e.iter().flat_map(|x| [x.n, x.n_prime, x.m, x.m_prime]).collect();
            if flat.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid("epoch exponents must be non-decreasing"));
            }
            if let Some(first) = e.first() {
                if !f2_dominated(f2, 1.0, first.n, first.n_prime.min(k_max)) {
                    return Err(Error::InvalidF2(format!(
                        "f2(2^s) > 2^(2^s) on [{}, {}]",
                        first.n, first.n_prime
                    )));
                }
            }
            e
        }
        None => auto_epochs(f2, k_max)?,
    };
    let mut regimes = vec![Regime::Square; k_max];
    for e in &epochs {
        for r in regimes.iter_mut().take(e.m_prime.min(k_max)).skip(e.n_prime) {
            *r = Regime::Hold;
        }
    }
    let mut values = vec![BigUint::from(2u32)];
    for k in 0..k_max {
        let last = values[k].clone();
        values.push(match regimes[k] {
            Regime::Square => &last * &last,
            Regime::Hold => last,
        });
    }
    let dominates_on_up_intervals = epochs
        .iter()
        .all(|e| (e.n..=e.n_prime.min(k_max)).all(|k| values[k] >= f2(1u64 << k)));
    let small_on_hold_intervals = epochs.iter().all(|e| {
        (e.m.max(1)..=e.m_prime.min(k_max)).all(|k| values[k].to_f64().unwrap_or(f64::INFINITY) <= (k as f64).log2())
    });
    Ok(DyadicGProfile {
        values,
        regimes,
        epochs,
        dominates_on_up_intervals,
        small_on_hold_intervals,
    })
}

/// `log2 g(2^k)` when every step outside `holds` squares `g(1) = 2`.
fn log2_of_g(k: usize, holds: &[(usize, usize)]) -> u128 {
    let mut e: u128 = 1;
    for j in 0..k {
        if !holds.iter().any(|&(a, b)| j >= a && j < b) {
            e = e.saturating_mul(2);
        }
    }
    e
}

fn auto_epochs(f2: &dyn Fn(u64) -> BigUint, k_max: usize) -> Result<Vec<Epoch>> {
    let n1 = (2..=k_max)
        .find(|&r| f2_dominated(f2, 1.0, r, k_max))
        .ok_or_else(|| Error::InvalidF2(format!("f2(2^s) > 2^(2^s) up to s = {k_max}")))?;
    let mut epochs = Vec::new();
    let mut n = n1;
    let mut holds: Vec<(usize, usize)> = Vec::new();
    loop {
        let n_prime = n + 1;
        // c = g(2^{n'}) = 2^e and m must reach 2^c.
        let e = log2_of_g(n_prime, &holds);
        let m = if e >= 6 {
            usize::MAX / 4
        } else {
            (1usize << (1u32 << e)).max(n_prime + 1)
        };
        let m_prime = m.saturating_add(1);
        epochs.push(Epoch { n, n_prime, m, m_prime });
        holds.push((n_prime, m_prime));
        if m_prime >= k_max {
            break;
        }
        let big_m_log2 = log2_of_g(m_prime, &holds) as f64;
        let base_log2 = big_m_log2 / (1u64 << m_prime.min(62)) as f64;
        match (m_prime + 1..=k_max).find(|&r| f2_dominated(f2, base_log2, r, k_max)) {
            Some(r) => n = r,
            None => break,
        }
        if n + 1 > k_max {
            break;
        }
    }
    Ok(epochs)
}

/// `g_U(n) = sum_{s<=n} a_s` for the Euler product of the increments.
pub fn enveloping_growth(gl_increments: &[u64], n: usize) -> Result<(GrowthTab, TruncatedSeries)> {
    let series = euler_product(gl_increments, n)?;
    Ok((GrowthTab::new(series.partial_sums(), Label::Exact), series))
}

/// `floor(n^2 log2(n + 1))` for `n = 1..=N`.
pub fn quadratic_log_increments(n: usize) -> Vec<u64> {
    (1..=n as u64)
        .map(|k| {
            if (k + 1).is_power_of_two() {
                k * k * u64::from((k + 1).trailing_zeros())
            } else {
                ((k * k) as f64 * ((k + 1) as f64).log2()).floor() as u64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDimEstimate {
    pub q: u32,
    pub lower_est: f64,
    pub upper_est: f64,
    pub window: (usize, usize),
}

fn iterated_ln(x: f64, times: u32) -> f64 {
    (0..times).fold(x, |acc, _| acc.ln())
}

/// The exponent `α` with `Φ_α^q(n) = g`, if defined.
pub fn invert_scale(q: u32, n: usize, g: &BigUint) -> Option<f64> {
    let nf = n as f64;
    let a = match q {
        1 => g.to_f64()?,
        2 => ln_big(g) / nf.ln(),
        3 => {
            let lg = ln_big(g);
            if lg <= 1.0 {
                return None;
            }
            let beta = lg.ln() / nf.ln();
            if beta >= 1.0 {
                return None;
            }
            beta / (1.0 - beta)
        }
        _ => {
            let l = iterated_ln(nf, q - 3);
            let lg = ln_big(g);
            if l <= 1.0 || lg <= 0.0 || nf <= lg {
                return None;
            }
            l.ln() / (nf / lg).ln()
        }
    };
    a.is_finite().then_some(a)
}

/// Running extremes of the inverted scale over the tail half of the table.
pub fn qdim_estimate(g: &GrowthTab, q: u32) -> Result<QDimEstimate> {
    if !(1..=5).contains(&q) {
        return Err(Error::invalid(format!("q = {q} outside 1..=5")));
    }
    g.require_len(16)?;
    let n_max = g.n_max();
    let lo = (n_max / 2).max(2);
    let pts: Vec<f64> = (lo..=n_max).filter_map(|n| invert_scale(q, n, &g.values[n])).collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    let lower_est = pts.iter().copied().fold(f64::INFINITY, f64::min);
    let upper_est = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(QDimEstimate {
        q,
        lower_est,
        upper_est,
        window: (lo, n_max),
    })
}
