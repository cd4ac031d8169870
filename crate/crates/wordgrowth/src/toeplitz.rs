//! Rate sequences with a doubly exponential epoch schedule, the complexity
//! envelopes they induce, a 5-adic Toeplitz word generator checked against
//! those envelopes, and the analytic growth profiles of the two monomial
//! algebras and their tensor product.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::growth::{ln_big, pow_big};
use crate::words::{factor_classes, WordPrefix, WordStream};

pub type Rational = Ratio<u64>;

/// Parses `"3"`, `"5/2"` or `"2.5"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("not a non-negative rational: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac: u64 = frac.parse().map_err(|_| bad())?;
        return Ok(Rational::new(int * den + frac, den));
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzParams {
    #[serde_as(as = "DisplayFromStr")]
    pub alpha: Rational,
    #[serde_as(as = "DisplayFromStr")]
    pub beta: Rational,
    #[serde_as(as = "DisplayFromStr")]
    pub gamma: Rational,
    pub s: u64,
    pub t: u64,
}

impl ToeplitzParams {
    pub fn new(alpha: Rational, beta: Rational, gamma: Rational, s: u64, t: u64) -> Result<Self> {
        let two = Rational::from_integer(2);
        if !(two <= gamma && gamma <= alpha && alpha <= beta) {
            return Err(Error::invalid("need 2 <= gamma <= alpha <= beta"));
        }
        if s == 0 || t == 0 {
            return Err(Error::invalid("s and t must be positive"));
        }
        Ok(ToeplitzParams {
            alpha,
            beta,
            gamma,
            s,
            t,
        })
    }

    pub fn from_ints(alpha: u64, beta: u64, gamma: u64, s: u64, t: u64) -> Result<Self> {
        ToeplitzParams::new(
            Rational::from_integer(alpha),
            Rational::from_integer(beta),
            Rational::from_integer(gamma),
            s,
            t,
        )
    }
}

/// Epochs `s < d_1 < e_1 < d_2 < ...` with `e_i = 2^{d_i}`, `d_{i+1} = 2^{e_i}`,
/// saturated at `u64::MAX` once out of reach.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub d: Vec<u64>,
    pub e: Vec<u64>,
}

fn pow2_sat(x: u64) -> u64 {
    if x >= 64 {
        u64::MAX
    } else {
        1u64 << x
    }
}

impl EpochSchedule {
    /// All epochs starting at or below `k_max`, plus the first one beyond.
    pub fn new(d1: u64, k_max: u64) -> Result<Self> {
        if d1 < 2 {
            return Err(Error::invalid("d_1 must be at least 2"));
        }
        let mut d = vec![d1];
        let mut e = vec![pow2_sat(d1)];
        while *d.last().unwrap() <= k_max && *e.last().unwrap() < u64::MAX {
            let next = pow2_sat(*e.last().unwrap());
            d.push(next);
            e.push(pow2_sat(next));
        }
        Ok(EpochSchedule { d, e })
    }

    /// `e_0 = d_0 = s`, then the stored epochs.
    fn bounds(&self, s: u64) -> (Vec<u64>, Vec<u64>) {
        let mut d = vec![s];
        d.extend(&self.d);
        let mut e = vec![s];
        e.extend(&self.e);
        (d, e)
    }
}

/// `ceil(5^x m)` for a rational `x >= 0`, exact.
pub fn ceil_pow5_times(x: &Rational, m: &BigUint) -> BigUint {
    let (p, q) = (*x.numer(), *x.denom());
    let target = pow_big(5, p) * num_traits::pow(m.clone(), q as usize);
    if q == 1 {
        return target;
    }
    let r = target.nth_root(q as u32);
    if num_traits::pow(r.clone(), q as usize) < target {
        r + 1u32
    } else {
        r
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSequences {
    pub params: ToeplitzParams,
    pub schedule: EpochSchedule,
    /// `n[k - 1] = n_k`.
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub n: Vec<BigUint>,
    /// `m[k - 1] = m_k`.
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub m: Vec<BigUint>,
    /// Largest consecutive ratio of either sequence.
    pub lambda: f64,
}

impl RateSequences {
    pub fn k_max(&self) -> usize {
        self.n.len()
    }

    pub fn n_at(&self, k: usize) -> &BigUint {
        &self.n[k - 1]
    }

    pub fn m_at(&self, k: usize) -> &BigUint {
        &self.m[k - 1]
    }

    /// First `k` violating `x_{k+1} <= (x_k - 1)^2` or `x_k >= 3`, if any.
    pub fn growth_cap_violation(&self) -> Option<(char, usize)> {
        for (name, seq) in [('n', &self.n), ('m', &self.m)] {
            for k in 0..seq.len() {
                if seq[k] < BigUint::from(3u32) {
                    return Some((name, k + 1));
                }
                if k + 1 < seq.len() {
                    let c = &seq[k] - 1u32;
                    if seq[k + 1] > &c * &c {
                        return Some((name, k + 1));
                    }
                }
            }
        }
        None
    }
}

/// The recurrences as stated, without the growth-cap check.
pub fn build_rates_raw(params: &ToeplitzParams, schedule: &EpochSchedule, k_max: usize) -> Result<RateSequences> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be positive"));
    }
    if schedule.d.first().is_none_or(|&d1| d1 <= params.s) {
        return Err(Error::invalid("need s < d_1"));
    }
    let two = Rational::from_integer(2);
    let (xa, xb, xg) = (params.alpha - two, params.beta - two, params.gamma - two);
    let (d, e) = schedule.bounds(params.s);
    let t = BigUint::from(params.t);
    let in_growth =
        |k: u64, lo: &[u64], hi: &[u64], from: usize| -> bool { (from..lo.len()).any(|i| lo[i] <= k && k < hi[i]) };
    let mut m = vec![t.clone()];
    let mut n = vec![t.clone()];
    for k in 1..k_max as u64 {
        // m_{k+1}: grows on [d_i, e_i) for i >= 1, else t.
        let mk = &m[k as usize - 1];
        let next_m = if k >= params.s && in_growth(k, &d, &e, 1) {
            ceil_pow5_times(&xb, mk)
        } else {
            t.clone()
        };
        // n_{k+1}: alpha on [e_i, d_{i+1}) for i >= 0, reset at d_i + 1, gamma on (d_i, e_i).
        let nk = &n[k as usize - 1];
        let next_n = if k < params.s || d[1..].contains(&k) {
            t.clone()
        } else if in_growth(k, &e, &d[1..], 0) {
            ceil_pow5_times(&xa, nk)
        } else {
            ceil_pow5_times(&xg, nk)
        };
        m.push(next_m);
        n.push(next_n);
    }
    let ratio = |s: &[BigUint]| {
        s.windows(2)
            .map(|w| (ln_big(&w[1]) - ln_big(&w[0])).exp())
            .fold(1.0f64, f64::max)
    };
    let lambda = ratio(&n).max(ratio(&m));
    let max_exp = rational_to_f64(&std::cmp::max(params.alpha, params.beta)) - 2.0;
    let cap = 5f64.powf(max_exp) + 1.0;
    if lambda > cap + 1e-9 {
        return Err(Error::invalid(format!("consecutive ratio {lambda} exceeds {cap}")));
    }
    Ok(RateSequences {
        params: params.clone(),
        schedule: schedule.clone(),
        n,
        m,
        lambda,
    })
}

/// The recurrences with the growth caps verified for every `k <= k_max`.
pub fn build_rates(params: &ToeplitzParams, schedule: &EpochSchedule, k_max: usize) -> Result<RateSequences> {
    let rates = build_rates_raw(params, schedule, k_max)?;
    if let Some((name, k)) = rates.growth_cap_violation() {
        return Err(Error::ParamsTooSmall(format!(
            "{name}_k breaks x_(k+1) <= (x_k - 1)^2 or x_k >= 3 at k = {k} with t = {}",
            params.t
        )));
    }
    Ok(rates)
}

/// Raises `t` until the growth caps hold.
pub fn build_rates_auto(params: &ToeplitzParams, schedule: &EpochSchedule, k_max: usize) -> Result<RateSequences> {
    let mut p = params.clone();
    for _ in 0..10_000 {
        match build_rates(&p, schedule, k_max) {
            Err(Error::ParamsTooSmall(_)) => p.t += 1,
            other => return other,
        }
    }
    Err(Error::ParamsTooSmall(format!(
        "no t up to {} satisfies the growth caps",
        p.t
    )))
}

/// Smallest constants in `x_k <= c 5^{(exp - 2) k}` over an index set.
fn smallest_constant(seq: &[BigUint], exponent: &Rational, ks: impl Iterator<Item = usize>) -> Option<f64> {
    let x = rational_to_f64(exponent) - 2.0;
    ks.filter(|&k| k >= 1 && k <= seq.len())
        .map(|k| (ln_big(&seq[k - 1]) - x * k as f64 * 5f64.ln()).exp())
        .reduce(f64::max)
}

/// One displayed lower bound at a scheduled index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedBound {
    pub name: String,
    pub k: u64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateChecks {
    /// `m_k <= c1 5^{(beta-2)k}` on `(d_i, e_i]`.
    pub c1: Option<f64>,
    /// `n_k <= c2 5^{(gamma-2)k}` on `(d_i, e_i]`.
    pub c2: Option<f64>,
    /// `n_k <= c3 5^{(alpha-2)k}` on `(e_i, d_{i+1}]`.
    pub c3: Option<f64>,
    pub lower_bounds: Vec<IndexedBound>,
}

impl RateChecks {
    pub fn all_hold(&self) -> bool {
        self.lower_bounds.iter().all(|b| b.holds)
    }
}

/// `x_k >= (5^{exp-2})^{k - from}`, compared as `x_k^q >= 5^{p (k - from)}`.
fn geometric_floor_holds(x: &BigUint, exponent: &Rational, steps: u64) -> bool {
    let e = exponent - Rational::from_integer(2);
    let (p, q) = (*e.numer(), *e.denom());
    num_traits::pow(x.clone(), q as usize) >= pow_big(5, p * steps)
}

pub fn check_rates(rates: &RateSequences) -> RateChecks {
    let k_max = rates.k_max() as u64;
    let p = &rates.params;
    let sched = &rates.schedule;
    let de: Vec<(u64, u64)> = sched.d.iter().copied().zip(sched.e.iter().copied()).collect();
    let in_de = |k: usize| de.iter().any(|&(d, e)| d < k as u64 && k as u64 <= e);
    let in_ed = |k: usize| {
        de.iter()
            .enumerate()
            .any(|(i, &(_, e))| e < k as u64 && sched.d.get(i + 1).is_none_or(|&d| k as u64 <= d))
    };
    let c1 = smallest_constant(&rates.m, &p.beta, (1..=rates.k_max()).filter(|&k| in_de(k)));
    let c2 = smallest_constant(&rates.n, &p.gamma, (1..=rates.k_max()).filter(|&k| in_de(k)));
    let c3 = smallest_constant(&rates.n, &p.alpha, (1..=rates.k_max()).filter(|&k| in_ed(k)));
    let mut lower_bounds = Vec::new();
    for &(d, e) in &de {
        let k = pow2_sat(d);
        if k <= k_max {
            lower_bounds.push(IndexedBound {
                name: "m at 2^d_i".into(),
                k,
                holds: geometric_floor_holds(rates.m_at(k as usize), &p.beta, k - d),
            });
            lower_bounds.push(IndexedBound {
                name: "n at 2^d_i".into(),
                k,
                holds: geometric_floor_holds(rates.n_at(k as usize), &p.gamma, k - d),
            });
        }
        let k = pow2_sat(e);
        if k <= k_max {
            lower_bounds.push(IndexedBound {
                name: "n at 2^e_i".into(),
                k,
                holds: geometric_floor_holds(rates.n_at(k as usize), &p.alpha, k - e),
            });
        }
    }
    RateChecks {
        c1,
        c2,
        c3,
        lower_bounds,
    }
}

/// `(2 5^{k-1} x_k, 2 5^k x_k)`.
pub fn analytic_complexity_envelope(seq: &[BigUint], k: usize) -> Result<(BigUint, BigUint)> {
    if k == 0 || k > seq.len() {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", seq.len())));
    }
    let x = &seq[k - 1];
    let lo = 2u32 * pow_big(5, k as u64 - 1) * x;
    let hi = 2u32 * pow_big(5, k as u64) * x;
    Ok((lo, hi))
}

/// `(floor(2 r x_k / 25), 10 r x_{k+1})` for `5^k <= r < 5^{k+1}`.
pub fn interpolated_envelope(seq: &[BigUint], r: &BigUint) -> Result<(BigUint, BigUint)> {
    if r < &BigUint::from(5u32) {
        return Err(Error::invalid("interpolation needs r >= 5"));
    }
    let mut k = 0usize;
    let mut p = BigUint::one();
    while &(&p * 5u32) <= r {
        p *= 5u32;
        k += 1;
    }
    if k + 1 > seq.len() {
        return Err(Error::invalid(format!("needs x_{} beyond the table", k + 1)));
    }
    let lo = (2u32 * r * &seq[k - 1]) / 25u32;
    let hi = 10u32 * r * &seq[k];
    Ok((lo, hi))
}

/// Fill rule of one 5-adic level: digits in `holes` defer to the next level,
/// the others take `pattern[digit]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelFill {
    pub holes: [bool; 5],
    pub pattern: [u32; 5],
}

impl LevelFill {
    /// `q` holes on the top digits, filled digits cycling through `a` letters from `offset`.
    pub fn new(q: usize, a: u32, offset: u32) -> Self {
        let mut holes = [false; 5];
        for h in holes.iter_mut().skip(5 - q.min(4)) {
            *h = true;
        }
        let mut pattern = [0u32; 5];
        for (i, p) in pattern.iter_mut().enumerate() {
            *p = (i as u32 + offset) % a.max(1);
        }
        LevelFill { holes, pattern }
    }

    pub fn hole_count(&self) -> usize {
        self.holes.iter().filter(|&&h| h).count()
    }
}

/// A Toeplitz word: position `x` takes the pattern letter of the first base-5
/// digit of `x` that is not a hole at its level, so it repeats with period
/// `5^{j+1}` where `j` is that level. Digit 0 is never a hole, so every
/// position is filled. Levels beyond the table use `tail`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzWord {
    pub levels: Vec<LevelFill>,
    pub tail: LevelFill,
}

impl ToeplitzWord {
    pub fn letter(&self, mut x: u64) -> u32 {
        let mut j = 0;
        loop {
            let fill = self.levels.get(j).unwrap_or(&self.tail);
            let digit = (x % 5) as usize;
            if !fill.holes[digit] {
                return fill.pattern[digit];
            }
            x /= 5;
            j += 1;
        }
    }

    /// Level at which position `x` is filled.
    pub fn fill_level(&self, mut x: u64) -> usize {
        let mut j = 0;
        loop {
            let fill = self.levels.get(j).unwrap_or(&self.tail);
            if !fill.holes[(x % 5) as usize] {
                return j;
            }
            x /= 5;
            j += 1;
        }
    }

    pub fn materialize(&self, len: usize) -> Vec<u32> {
        (0..len as u64).map(|x| self.letter(x)).collect()
    }
}

impl WordStream for ToeplitzWord {
    fn id(&self) -> String {
        "toeplitz".into()
    }

    fn prefix(&self, len: usize) -> Result<WordPrefix> {
        Ok(WordPrefix::new(self.materialize(len), self.id()))
    }
}

/// Measured `p(5^k)` against the envelope at one `k`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub k: usize,
    pub measured: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub lo: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub hi: BigUint,
    pub inside: bool,
}

/// Largest `k >= 1` with `5^{k+1} <= prefix_len / 2`.
pub fn checkable_k(prefix_len: usize) -> usize {
    let mut k = 0;
    while 5usize.pow(k as u32 + 2) <= prefix_len / 2 {
        k += 1;
    }
    k
}

pub fn check_envelopes(word: &[u32], targets: &[BigUint], k_top: usize) -> Result<Vec<EnvelopeCheck>> {
    let codes: Vec<u64> = word.iter().map(|&c| u64::from(c)).collect();
    (1..=k_top.min(targets.len()))
        .map(|k| {
            let (lo, hi) = analytic_complexity_envelope(targets, k)?;
            let measured = factor_classes(&codes, 5usize.pow(k as u32)).len() as u64;
            let mb = BigUint::from(measured);
            Ok(EnvelopeCheck {
                k,
                inside: lo <= mb && mb <= hi,
                measured,
                lo,
                hi,
            })
        })
        .collect()
}

/// Distance of a measurement from its envelope on a log scale; zero inside.
fn miss(c: &EnvelopeCheck) -> f64 {
    let m = (c.measured.max(1) as f64).ln();
    let lo = ln_big(&c.lo);
    let hi = ln_big(&c.hi);
    if m < lo {
        lo - m
    } else if m > hi {
        m - hi
    } else {
        0.0
    }
}

fn candidates(j: usize) -> Vec<LevelFill> {
    let mut out = Vec::new();
    for q in 1..=4 {
        for a in [2u32, 1, 3, 4] {
            out.push(LevelFill::new(q, a, j as u32));
        }
    }
    out
}

/// Builds a Toeplitz word whose `p(5^k)` lies in `[2 5^{k-1} x_k, 2 5^k x_k]`
/// for every `k` checkable on a prefix of `prefix_len`.
///
/// Levels are fixed from the bottom: at level `j` the first candidate fill
/// keeping every already-checkable `k <= j + 1` inside its envelope is taken,
/// with deeper levels at the default fill. The finished word is re-measured and
/// any remaining miss is reported as a generator mismatch.
pub fn generate_toeplitz(targets: &[BigUint], prefix_len: usize) -> Result<ToeplitzWord> {
    if prefix_len == 0 {
        return Err(Error::invalid("prefix_len must be positive"));
    }
    let k_top = checkable_k(prefix_len).min(targets.len());
    let mut depth = 0;
    while 5usize.pow(depth as u32) < prefix_len {
        depth += 1;
    }
    let tail = LevelFill::new(1, 2, 0);
    let mut word = ToeplitzWord {
        levels: Vec::with_capacity(depth),
        tail,
    };
    for j in 0..depth {
        let upto = (j + 1).min(k_top);
        let mut best: Option<(f64, LevelFill)> = None;
        for cand in candidates(j) {
            word.levels.push(cand);
            let checks = check_envelopes(&word.materialize(prefix_len), targets, upto)?;
            word.levels.pop();
            let score: f64 = checks.iter().map(miss).sum();
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, cand));
            }
            if score == 0.0 {
                break;
            }
        }
        word.levels.push(best.unwrap().1);
    }
    let final_checks = check_envelopes(&word.materialize(prefix_len), targets, k_top)?;
    if let Some(c) = final_checks.iter().find(|c| !c.inside) {
        return Err(Error::GeneratorMismatch {
            k: c.k,
            measured: c.measured.to_string(),
            lo: c.lo.to_string(),
            hi: c.hi.to_string(),
        });
    }
    Ok(word)
}

/// Least `d` in `5, 25, 125, ...` with `w[n] = w[n + i d]` for every materialized `i`.
pub fn toeplitz_period(word: &[u32], n: usize) -> Option<usize> {
    let mut d = 5usize;
    while n + d < word.len() {
        if (n..word.len()).step_by(d).all(|i| word[i] == word[n]) {
            return Some(d);
        }
        d *= 5;
    }
    None
}

/// Values of a growth function at sample points.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledProfile {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub points: Vec<BigUint>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub values: Vec<BigUint>,
}

impl SampledProfile {
    /// Least-squares slope of `ln value` against `ln point` over the sample indices.
    pub fn window_slope(&self, range: std::ops::Range<usize>) -> Option<f64> {
        let pts: Vec<(f64, f64)> = range
            .filter(|&i| i < self.points.len())
            .map(|i| (ln_big(&self.points[i]), ln_big(&self.values[i])))
            .collect();
        log_log_slope(&pts)
    }
}

pub fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Growth envelopes of the two monomial algebras and their tensor product,
/// sampled at `r = 5^k` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremDProfiles {
    pub rates: RateSequences,
    /// `5^k p_hi(5^k) >= g(5^k)`, at `5^k`.
    pub g_x_hi: SampledProfile,
    /// `5^k p_lo(5^k) <= g(2 5^k)`, at `2 5^k`.
    pub g_x_lo: SampledProfile,
    pub g_y_hi: SampledProfile,
    pub g_y_lo: SampledProfile,
    /// `g_X(5^k) g_Y(5^k)` upper bounds, an upper bound of the tensor growth at `5^k`.
    pub tensor_hi: SampledProfile,
    /// `g_X(2 5^k) g_Y(2 5^k)` lower bounds, a lower bound of the tensor growth at `4 5^k`.
    pub tensor_lo: SampledProfile,
    /// `(r_i, 4 r_i^{beta+gamma} / (625 (log5 r_i)^{3(beta+gamma-4)}))` as logs, for reachable `r_i = 5^{2^{d_i}}`.
    pub explicit_tensor_bounds: Vec<ExplicitBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitBound {
    pub log5_r: u64,
    /// `ln` of the closed-form lower bound at `4 r`.
    pub ln_bound: f64,
    /// `ln` of the sampled lower bound at `4 r`.
    pub ln_sampled: f64,
}

pub fn theorem_d_profiles(params: &ToeplitzParams, d1: u64, k_max: usize) -> Result<TheoremDProfiles> {
    let schedule = EpochSchedule::new(d1, k_max as u64)?;
    let rates = build_rates_auto(params, &schedule, k_max)?;
    let pts = |scale: u32| -> Vec<BigUint> { (1..=k_max).map(|k| scale * pow_big(5, k as u64)).collect() };
    let hi = |seq: &[BigUint]| -> Vec<BigUint> {
        (1..=k_max)
            .map(|k| pow_big(5, k as u64) * analytic_complexity_envelope(seq, k).unwrap().1)
            .collect()
    };
    let lo = |seq: &[BigUint]| -> Vec<BigUint> {
        (1..=k_max)
            .map(|k| pow_big(5, k as u64) * analytic_complexity_envelope(seq, k).unwrap().0)
            .collect()
    };
    let g_x_hi = SampledProfile {
        points: pts(1),
        values: hi(&rates.n),
    };
    let g_x_lo = SampledProfile {
        points: pts(2),
        values: lo(&rates.n),
    };
    let g_y_hi = SampledProfile {
        points: pts(1),
        values: hi(&rates.m),
    };
    let g_y_lo = SampledProfile {
        points: pts(2),
        values: lo(&rates.m),
    };
    let tensor_hi = SampledProfile {
        points: pts(1),
        values: g_x_hi.values.iter().zip(&g_y_hi.values).map(|(a, b)| a * b).collect(),
    };
    let tensor_lo = SampledProfile {
        points: pts(4),
        values: g_x_lo.values.iter().zip(&g_y_lo.values).map(|(a, b)| a * b).collect(),
    };
    let bg = rational_to_f64(&params.beta) + rational_to_f64(&params.gamma);
    let explicit_tensor_bounds = schedule
        .d
        .iter()
        .map(|&d| pow2_sat(d))
        .filter(|&k| k as usize <= k_max)
        .map(|k| {
            let ln_r = k as f64 * 5f64.ln();
            ExplicitBound {
                log5_r: k,
                ln_bound: 4f64.ln() + bg * ln_r - 625f64.ln() - 3.0 * (bg - 4.0) * (k as f64).ln(),
                ln_sampled: ln_big(&tensor_lo.values[k as usize - 1]),
            }
        })
        .collect();
    Ok(TheoremDProfiles {
        rates,
        g_x_hi,
        g_x_lo,
        g_y_hi,
        g_y_lo,
        tensor_hi,
        tensor_lo,
        explicit_tensor_bounds,
    })
}

/// Sample index (0-based) of `r = 5^k`.
pub fn sample_index(k: usize) -> usize {
    k - 1
}

/// `ln g / ln r` at a sample, where `r` is the sample's nominal scale.
pub fn log_ratio(value: &BigUint, log5_r: u64) -> f64 {
    ln_big(value) / (log5_r as f64 * 5f64.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{recurrence_gap, Materialized};
    use num_traits::Zero;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn sched() -> EpochSchedule {
        EpochSchedule::new(5, 200).unwrap()
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("5/2").unwrap(), Rational::new(5, 2));
        assert_eq!(parse_rational("2.5").unwrap(), Rational::new(5, 2));
        assert_eq!(parse_rational("3").unwrap(), Rational::from_integer(3));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn epochs() {
        let s = sched();
        assert_eq!(s.d[0], 5);
        assert_eq!(s.e[0], 32);
        assert_eq!(s.d[1], 1 << 32);
    }

    #[test]
    fn ceilings_exact() {
        let half = Rational::new(1, 2);
        assert_eq!(ceil_pow5_times(&half, &big(2)), big(5));
        assert_eq!(ceil_pow5_times(&half, &big(5)), big(12));
        assert_eq!(ceil_pow5_times(&Rational::from_integer(1), &big(2)), big(10));
        assert_eq!(ceil_pow5_times(&Rational::from_integer(0), &big(7)), big(7));
        // 5^{1/2} * 5 = 5^{3/2} is irrational; exact powers stay exact.
        assert_eq!(ceil_pow5_times(&half, &big(20)), big(45));
    }

    #[test]
    fn beta_two_is_constant() {
        let p = ToeplitzParams::from_ints(2, 2, 2, 4, 2).unwrap();
        let r = build_rates_raw(&p, &sched(), 60).unwrap();
        assert!(r.m.iter().all(|m| *m == big(2)));
        assert!(r.n.iter().all(|n| *n == big(2)));
    }

    #[test]
    fn alpha_three_quintuples_after_e1() {
        let p = ToeplitzParams::from_ints(3, 3, 2, 4, 2).unwrap();
        let r = build_rates_raw(&p, &sched(), 40).unwrap();
        assert_eq!(r.n_at(32), &big(2));
        assert_eq!(r.n_at(33), &big(10));
        assert_eq!(r.n_at(34), &big(50));
        // m grows on [d_1, e_1) and resets after e_1.
        assert_eq!(r.m_at(5), &big(2));
        assert_eq!(r.m_at(6), &big(10));
        assert_eq!(r.m_at(32), &(big(2) * pow_big(5, 27)));
        assert_eq!(r.m_at(33), &big(2));
        // n grows from s, resets at d_1 + 1.
        assert_eq!(r.n_at(4), &big(2));
        assert_eq!(r.n_at(5), &big(10));
        assert_eq!(r.n_at(6), &big(2));
        assert!(matches!(build_rates(&p, &sched(), 40), Err(Error::ParamsTooSmall(_))));
    }

    #[test]
    fn gamma_half_integer() {
        let p = ToeplitzParams::new(Rational::new(5, 2), Rational::new(5, 2), Rational::new(5, 2), 4, 2).unwrap();
        let r = build_rates_raw(&p, &sched(), 10).unwrap();
        assert_eq!(r.n_at(6), &big(2));
        assert_eq!(r.n_at(7), &big(5));
        assert_eq!(r.n_at(8), &big(12));
    }

    #[test]
    fn auto_raise_meets_caps() {
        let p = ToeplitzParams::from_ints(3, 3, 2, 4, 2).unwrap();
        let r = build_rates_auto(&p, &sched(), 120).unwrap();
        // 5t <= (t - 1)^2 first holds at t = 7.
        assert_eq!(r.params.t, 7);
        assert!(r.growth_cap_violation().is_none());
        assert!(r.lambda <= 5.0 + 1.0);
        let checks = check_rates(&r);
        assert!(checks.all_hold());
        assert!(!checks.lower_bounds.is_empty());
        assert!(checks.c1.is_some() && checks.c2.is_some() && checks.c3.is_some());
    }

    #[test]
    fn envelopes() {
        let seq = vec![big(2), big(2), big(10)];
        assert_eq!(analytic_complexity_envelope(&seq, 1).unwrap(), (big(4), big(20)));
        let ones = vec![big(1); 4];
        assert_eq!(analytic_complexity_envelope(&ones, 3).unwrap().0, big(50));
        assert_eq!(interpolated_envelope(&seq, &big(30)).unwrap(), (big(4), big(3000)));
    }

    fn toeplitz_ok(word: &[u32]) -> bool {
        (0..word.len() / 25).all(|n| toeplitz_period(word, n).is_some())
    }

    #[test]
    fn generator_constant_two() {
        let targets = vec![big(2); 10];
        let w = generate_toeplitz(&targets, 5usize.pow(5)).unwrap();
        let word = w.materialize(5usize.pow(5));
        assert!(toeplitz_ok(&word));
        for c in check_envelopes(&word, &targets, 3).unwrap() {
            assert!(c.inside, "{c:?}");
        }
    }

    #[test]
    fn generator_rates_one() {
        let targets = vec![big(1); 10];
        match generate_toeplitz(&targets, 5usize.pow(5)) {
            Ok(w) => {
                let word = w.materialize(5usize.pow(5));
                for c in check_envelopes(&word, &targets, 3).unwrap() {
                    assert!(BigUint::from(c.measured) <= c.hi);
                }
            }
            Err(e) => assert!(matches!(e, Error::GeneratorMismatch { .. })),
        }
    }

    #[test]
    fn generated_factors_recur() {
        let targets = vec![big(2); 10];
        let w = generate_toeplitz(&targets, 5usize.pow(5)).unwrap();
        let prefix = w.prefix(5usize.pow(5)).unwrap();
        let stream = Materialized(prefix.clone());
        for (start, len) in [(0usize, 3usize), (7, 5), (100, 10), (31, 25)] {
            let f = prefix.truncate(start + len);
            let factor = WordPrefix::new(f.letters[start..].to_vec(), "f");
            let gap = recurrence_gap(&stream, &factor, 5usize.pow(5)).unwrap().unwrap();
            assert!(gap <= 5usize.pow(5), "factor at {start}: gap {gap}");
        }
    }

    #[test]
    fn theorem_d_first_epoch() {
        let p = ToeplitzParams::from_ints(3, 3, 2, 4, 2).unwrap();
        let d = theorem_d_profiles(&p, 5, 200).unwrap();
        let gx_gamma = d.g_x_hi.window_slope(sample_index(7)..sample_index(31)).unwrap();
        assert!((gx_gamma - 2.0).abs() < 0.3, "{gx_gamma}");
        let gx_alpha = d.g_x_hi.window_slope(sample_index(33)..sample_index(83)).unwrap();
        assert!((gx_alpha - 3.0).abs() < 0.3, "{gx_alpha}");
        let gy_beta = d.g_y_hi.window_slope(sample_index(6)..sample_index(32)).unwrap();
        assert!((gy_beta - 3.0).abs() < 0.3, "{gy_beta}");
        let tl = &d.tensor_lo.values[sample_index(32)];
        assert!(log_ratio(tl, 32) >= 4.7);
        let eb = &d.explicit_tensor_bounds[0];
        assert_eq!(eb.log5_r, 32);
        assert!(eb.ln_sampled >= eb.ln_bound);
    }

    #[test]
    fn additive_case() {
        let p = ToeplitzParams::from_ints(2, 2, 2, 4, 2).unwrap();
        let d = theorem_d_profiles(&p, 5, 80).unwrap();
        let s = d.g_x_hi.window_slope(0..80).unwrap();
        assert!((s - 2.0).abs() < 0.05);
        let s = d.tensor_hi.window_slope(0..80).unwrap();
        assert!((s - 4.0).abs() < 0.1);
    }

    #[test]
    fn tensor_lo_below_hi_within_regimes() {
        let p = ToeplitzParams::from_ints(3, 3, 2, 4, 2).unwrap();
        let d = theorem_d_profiles(&p, 5, 60).unwrap();
        // tensor_lo sits at 4 5^k, tensor_hi at 5^k: compare at k' >= k + 1.
        for range in [1..=32usize, 33..=60] {
            for k in range.clone() {
                for k2 in k + 1..=*range.end() {
                    assert!(d.tensor_lo.values[sample_index(k)] <= d.tensor_hi.values[sample_index(k2)]);
                }
            }
        }
    }

    #[test]
    fn reset_after_growth_contradicts_monotone_complexity() {
        // After m resets to t at e_1 + 1, the upper envelope at 5^{e_1+1} falls
        // below the lower envelope at 5^{e_1}, which no non-decreasing p allows.
        let p = ToeplitzParams::from_ints(3, 3, 2, 4, 2).unwrap();
        let d = theorem_d_profiles(&p, 5, 40).unwrap();
        let m = &d.rates.m;
        let lo_32 = analytic_complexity_envelope(m, 32).unwrap().0;
        let hi_33 = analytic_complexity_envelope(m, 33).unwrap().1;
        assert!(hi_33 < lo_32);
        assert!(d.tensor_lo.values[sample_index(32)] > d.tensor_hi.values[sample_index(33)]);
    }

    proptest! {
        #[test]
        fn ceil_is_least(p in 0u64..4, q in 1u64..4, m in 1u64..1000) {
            let x = Rational::new(p, q);
            let c = ceil_pow5_times(&x, &big(m));
            let target = pow_big(5, *x.numer()) * num_traits::pow(big(m), *x.denom() as usize);
            let qq = *x.denom() as usize;
            prop_assert!(num_traits::pow(c.clone(), qq) >= target);
            if !c.is_zero() {
                prop_assert!(num_traits::pow(&c - 1u32, qq) < target);
            }
        }

        #[test]
        fn toeplitz_words_are_toeplitz(
            qs in prop::collection::vec(1usize..=4, 1..5),
            as_ in prop::collection::vec(1u32..=3, 1..5),
        ) {
            let levels = qs.iter().zip(as_.iter().cycle()).enumerate()
                .map(|(j, (&q, &a))| LevelFill::new(q, a, j as u32)).collect();
            let w = ToeplitzWord { levels, tail: LevelFill::new(1, 2, 0) };
            let word = w.materialize(3125);
            for n in 0..125 {
                let d = 5usize.pow(w.fill_level(n as u64) as u32 + 1);
                prop_assert!((n..word.len()).step_by(d).all(|i| word[i] == word[n]));
            }
        }
    }
}
