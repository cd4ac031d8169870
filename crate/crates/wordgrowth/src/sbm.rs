//! Words of prescribed complexity built by doubling: `W(2^{n+1}) = W(2^n) C(2^n)`
//! with `C(2^n)` a subset of `W(2^n)` of size `ceil(f(2^{n+1}) / f(2^n))`.
//!
//! All words in `W(2^n)` have length `2^n`, so the lexicographic order of a
//! concatenation agrees with the order of the pair. `W(2^n)` is therefore a
//! mixed-radix product and its elements are addressed by big-integer indices;
//! no set is ever materialized.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::words::{factor_classes_upto, ComplexityProfile, WordPrefix, WordStream};

/// `f` at the powers of two, extended by `f(n) = f(2^ceil(log2 n))`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthTarget {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub values_at_pow2: Vec<BigUint>,
}

impl GrowthTarget {
    pub fn new(values_at_pow2: Vec<BigUint>) -> Result<Self> {
        if values_at_pow2.is_empty() {
            return Err(Error::invalid("growth target needs f(1)"));
        }
        if values_at_pow2.iter().any(|v| v.is_zero()) {
            return Err(Error::invalid("growth target values must be positive"));
        }
        if values_at_pow2[0].to_u32().is_none() {
            return Err(Error::invalid("f(1) is the alphabet size and must fit in 32 bits"));
        }
        for (n, w) in values_at_pow2.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::invalid(format!("f(2^{}) < f(2^{n})", n + 1)));
            }
            if w[1] > &w[0] * &w[0] {
                return Err(Error::invalid(format!("f(2^{}) > f(2^{n})^2", n + 1)));
            }
        }
        Ok(GrowthTarget { values_at_pow2 })
    }

    pub fn from_u64s(values: &[u64]) -> Result<Self> {
        GrowthTarget::new(values.iter().map(|&v| BigUint::from(v)).collect())
    }

    /// Continues the table with `f(2^{n+1}) = f(2^n)^2` up to `f(2^max_exp)`.
    pub fn extend_by_squaring(&self, max_exp: usize) -> GrowthTarget {
        let mut v = self.values_at_pow2.clone();
        while v.len() <= max_exp {
            let last = v.last().unwrap();
            v.push(last * last);
        }
        GrowthTarget { values_at_pow2: v }
    }

    pub fn alphabet(&self) -> u32 {
        self.values_at_pow2[0].to_u32().unwrap()
    }

    pub fn max_exp(&self) -> usize {
        self.values_at_pow2.len() - 1
    }

    /// `f(n)`, with `f(0) = f(1)`; `None` beyond the table.
    pub fn eval(&self, n: u64) -> Option<BigUint> {
        let e = if n <= 1 {
            0
        } else {
            (64 - (n - 1).leading_zeros()) as usize
        };
        self.values_at_pow2.get(e).cloned()
    }

    /// `f(2^k) | f(2^{k+1})` for every tabulated `k`.
    pub fn divisible(&self) -> bool {
        self.values_at_pow2.windows(2).all(|w| (&w[1] % &w[0]).is_zero())
    }
}

/// `C(2^n)`: the first `count - 1` indices of `W(2^n)` together with `last_index`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CSet {
    #[serde_as(as = "DisplayFromStr")]
    pub count: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub last_index: BigUint,
}

impl CSet {
    /// Index in `W(2^n)` of the `j`-th element of the set.
    pub fn member(&self, j: &BigUint) -> BigUint {
        if j + 1u32 < self.count {
            j.clone()
        } else {
            self.last_index.clone()
        }
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SBSets {
    pub f: GrowthTarget,
    /// `w_sizes[n] = |W(2^n)|` for `n = 0..=depth`.
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub w_sizes: Vec<BigUint>,
    /// `c[n] = C(2^n)` for `n = 0..depth`.
    pub c: Vec<CSet>,
    pub divisible_flag: bool,
    pub forced_full_word: bool,
}

impl SBSets {
    pub fn depth(&self) -> usize {
        self.c.len()
    }

    pub fn alphabet(&self) -> u32 {
        self.f.alphabet()
    }

    /// The element of `W(2^n)` with the given index.
    pub fn word(&self, n: usize, index: &BigUint) -> Vec<u32> {
        let mut out = Vec::with_capacity(1 << n);
        self.write_word(n, index, &mut out);
        out
    }

    fn write_word(&self, n: usize, index: &BigUint, out: &mut Vec<u32>) {
        if n == 0 {
            out.push(index.to_u32().expect("letter index"));
            return;
        }
        let (w, j) = index.div_rem(&self.c[n - 1].count);
        self.write_word(n - 1, &w, out);
        self.write_word(n - 1, &self.c[n - 1].member(&j), out);
    }

    /// Lexicographically last element of `C(2^n)`, used as the representative in `S`.
    pub fn representative(&self, n: usize) -> Vec<u32> {
        self.word(n, &self.c[n].last_index)
    }
}

const FULL_WORD_SCAN: u64 = 1 << 16;

/// Letter-set bitmask of an element of `W(2^n)` built so far, memoized.
fn letter_mask(c: &[CSet], n: usize, index: &BigUint, memo: &mut HashMap<(usize, BigUint), u64>) -> u64 {
    if n == 0 {
        return 1u64 << index.to_u32().unwrap();
    }
    if let Some(&m) = memo.get(&(n, index.clone())) {
        return m;
    }
    let (w, j) = index.div_rem(&c[n - 1].count);
    let member = c[n - 1].member(&j);
    let m = letter_mask(c, n - 1, &w, memo) | letter_mask(c, n - 1, &member, memo);
    memo.insert((n, index.clone()), m);
    m
}

/// Builds `W(1), C(1), ..., C(2^{depth-1}), W(2^depth)`.
///
/// With `force_full_word`, every `C(2^n)` also contains the lexicographically
/// least element of `W(2^n)` that uses every letter, when one exists within the
/// scan limit.
pub fn build_sb_sets(f: &GrowthTarget, depth: usize, force_full_word: bool) -> Result<SBSets> {
    if depth > f.max_exp() {
        return Err(Error::invalid(format!(
            "depth {depth} needs f(2^{depth}); table ends at f(2^{})",
            f.max_exp()
        )));
    }
    let alphabet = f.alphabet();
    if force_full_word && alphabet > 64 {
        return Err(Error::invalid("full-word forcing supports at most 64 letters"));
    }
    let full: u64 = if alphabet >= 64 {
        u64::MAX
    } else {
        (1u64 << alphabet) - 1
    };
    let mut w_sizes = vec![BigUint::from(alphabet)];
    let mut c: Vec<CSet> = Vec::with_capacity(depth);
    let mut memo = HashMap::new();
    for n in 0..depth {
        let (q, r) = f.values_at_pow2[n + 1].div_rem(&f.values_at_pow2[n]);
        let k = if r.is_zero() { q } else { q + 1u32 };
        let have = &w_sizes[n];
        if &k > have {
            return Err(Error::ConstructionImpossible {
                level: n,
                need: k.to_string(),
                have: have.to_string(),
            });
        }
        let mut last = &k - 1u32;
        if force_full_word {
            let limit = have.to_u64().map_or(FULL_WORD_SCAN, |h| h.min(FULL_WORD_SCAN));
            let hit = (0..limit)
                .map(BigUint::from)
                .find(|i| letter_mask(&c, n, i, &mut memo) == full);
            if let Some(rho) = hit {
                last = last.max(rho);
            }
        }
        w_sizes.push(have * &k);
        c.push(CSet {
            count: k,
            last_index: last,
        });
    }
    Ok(SBSets {
        f: f.clone(),
        w_sizes,
        c,
        divisible_flag: f.divisible(),
        forced_full_word: force_full_word,
    })
}

/// Prefix of the word `x C_0 C_1 C_2 ...` whose blocks are the last letter and
/// the representatives of the `C(2^j)`.
pub fn generate_s_prefix(sets: &SBSets, len: usize) -> Result<WordPrefix> {
    let covered = 1usize.checked_shl(sets.depth() as u32).unwrap_or(usize::MAX);
    if len > covered {
        return Err(Error::InsufficientDepth {
            need: len,
            have: covered,
        });
    }
    let mut out = vec![sets.alphabet() - 1];
    let mut j = 0;
    while out.len() < len {
        out.extend(sets.representative(j));
        j += 1;
    }
    out.truncate(len);
    Ok(WordPrefix::new(out, "sbm-s"))
}

/// `n_k = 2 max{i : delta(i) <= k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSchedule {
    /// `delta[i] = delta(i)`; `delta[0]` is unused.
    pub delta: Vec<u64>,
    /// `n[k - 1] = n_k`.
    pub n: Vec<u64>,
    pub invariant_ok: bool,
}

impl LevelSchedule {
    /// Level carried by block `C(2^j)`; `None` beyond the schedule.
    pub fn level_of_block(&self, j: u64) -> Option<u32> {
        if j <= self.n[0] {
            return Some(1);
        }
        (1..self.n.len()).find(|&i| j <= self.n[i]).map(|i| i as u32 + 1)
    }
}

pub fn build_level_schedule(delta: &[u64], k_max: usize) -> Result<LevelSchedule> {
    if delta.len() < 2 || k_max == 0 {
        return Err(Error::invalid("delta must be tabulated from 1 and k_max positive"));
    }
    let table = &delta[1..];
    if table.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("delta must be non-decreasing"));
    }
    if table.iter().enumerate().any(|(i, &d)| d > i as u64 + 1) {
        return Err(Error::invalid("delta(i) must not exceed i"));
    }
    let mut n = Vec::with_capacity(k_max);
    for k in 1..=k_max as u64 {
        if *table.last().unwrap() <= k {
            return Err(Error::InsufficientData {
                have: delta.len(),
                need: delta.len() + 1,
            });
        }
        let i = table.iter().rposition(|&d| d <= k).map_or(0, |p| p as u64 + 1);
        n.push(2 * i);
    }
    // min{k : r <= n_k - log2 k} <= delta(r) for every r whose delta is scheduled.
    let invariant_ok = table.iter().enumerate().all(|(r0, &d)| {
        let r = (r0 + 1) as f64;
        if d as usize > k_max {
            return true;
        }
        (1..=d).any(|k| r <= n[k as usize - 1] as f64 - (k as f64).log2())
    });
    Ok(LevelSchedule {
        delta: delta.to_vec(),
        n,
        invariant_ok,
    })
}

/// Smallest level schedule whose levels reach every block of the prefix.
pub fn level_schedule_covering(delta: &[u64], prefix_len: usize) -> Result<LevelSchedule> {
    let top_block = prefix_len.next_power_of_two().trailing_zeros() as u64;
    let mut k_max = 1;
    loop {
        let schedule = build_level_schedule(delta, k_max)?;
        if *schedule.n.last().unwrap() >= top_block {
            return Ok(schedule);
        }
        k_max += 1;
    }
}

/// The `S` prefix with every letter of block `C(2^j)` raised to its scheduled level.
pub fn generate_t_prefix(sets: &SBSets, schedule: &LevelSchedule, len: usize) -> Result<WordPrefix> {
    let s = generate_s_prefix(sets, len)?;
    let mut levels = Vec::with_capacity(len);
    for pos in 0..len {
        let j = if pos == 0 {
            0
        } else {
            u64::from(usize::BITS - 1 - pos.leading_zeros())
        };
        let level = schedule.level_of_block(j).ok_or(Error::InsufficientDepth {
            need: len,
            have: 1usize << (schedule.n.last().unwrap() + 1).min(63),
        })?;
        levels.push(level);
    }
    WordPrefix::with_levels(s.letters, levels, "sbm-t")
}

/// A count of factors with a flag for whether every needed length was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeveledCount {
    pub value: u64,
    /// `false` makes `value` a lower bound only.
    pub certified: bool,
}

/// Number of distinct factors of the prefix whose level-sum is at most `n`.
pub fn w_gamma_leveled_prefix(prefix: &WordPrefix, n: usize) -> Result<LeveledCount> {
    if n == 0 {
        return Ok(LeveledCount {
            value: 0,
            certified: true,
        });
    }
    let len = prefix.len();
    if len < 4 * n {
        return Err(Error::invalid(format!("prefix length {len} below 4n = {}", 4 * n)));
    }
    let levels = prefix
        .levels
        .as_ref()
        .ok_or_else(|| Error::invalid("leveled count needs a leveled prefix"))?;
    let mut sums = Vec::with_capacity(len + 1);
    sums.push(0u64);
    for &l in levels {
        sums.push(sums.last().unwrap() + u64::from(l));
    }
    let mut value = 0;
    let mut certified = true;
    for (i, classes) in factor_classes_upto(&prefix.codes(), n).iter().enumerate() {
        let m = i + 1;
        certified &= classes.iter().all(|c| c.count >= 2 || c.first <= len - 2 * m);
        value += classes
            .iter()
            .filter(|c| sums[c.first + m] - sums[c.first] <= n as u64)
            .count() as u64;
    }
    Ok(LeveledCount { value, certified })
}

/// `w(n)` for every `n = 0..=n_max` from one pass over the factor classes.
pub fn w_gamma_leveled_table(prefix: &WordPrefix, n_max: usize) -> Result<Vec<LeveledCount>> {
    let len = prefix.len();
    if len < 4 * n_max {
        return Err(Error::invalid(format!("prefix length {len} below 4n = {}", 4 * n_max)));
    }
    let levels = prefix
        .levels
        .as_ref()
        .ok_or_else(|| Error::invalid("leveled count needs a leveled prefix"))?;
    let mut sums = Vec::with_capacity(len + 1);
    sums.push(0u64);
    for &l in levels {
        sums.push(sums.last().unwrap() + u64::from(l));
    }
    // hits[s]: classes with level-sum exactly s; certified_upto[m]: lengths 1..=m certified.
    let mut hits = vec![0u64; n_max + 1];
    let mut certified_upto = vec![true; n_max + 1];
    if n_max > 0 {
        for (i, classes) in factor_classes_upto(&prefix.codes(), n_max).iter().enumerate() {
            let m = i + 1;
            let ok = classes.iter().all(|c| c.count >= 2 || c.first <= len - 2 * m);
            certified_upto[m] = certified_upto[m - 1] && ok;
            for c in classes {
                let s = sums[c.first + m] - sums[c.first];
                if s <= n_max as u64 {
                    hits[s as usize] += 1;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0;
    for n in 0..=n_max {
        acc += hits[n];
        out.push(LeveledCount {
            value: acc,
            certified: certified_upto[n],
        });
    }
    Ok(out)
}

pub fn w_gamma_leveled(stream: &dyn WordStream, n: usize, prefix_len: usize) -> Result<LeveledCount> {
    w_gamma_leveled_prefix(&stream.prefix(prefix_len)?, n)
}

/// Checked bounds at one length.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub n: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub f_n: BigUint,
    pub h_2n: u64,
    /// `f(n) <= h(2n)`.
    pub lower_ok: bool,
    pub h_n: u64,
    /// `h(n) <= 64 n^3 f(4n)`.
    pub cubic_ok: bool,
    /// `h(n) <= 16 n^2 f(4n)`, checked in the divisible case.
    pub quadratic_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// Every requested `n` was inside the certified horizon and the table of `f`.
    pub complete: bool,
}

impl SandwichReport {
    pub fn all_ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.lower_ok && r.cubic_ok && r.quadratic_ok.unwrap_or(true))
    }
}

/// Cumulative count `h(n) = p(0) + ... + p(n)`.
pub fn cumulative(profile: &ComplexityProfile, n: usize) -> u64 {
    (0..=n).map(|k| profile.p(k)).sum()
}

/// Checks `f(n) <= h(2n)`, `h(n) <= 64 n^3 f(4n)` and, when `f` is divisible,
/// `h(n) <= 16 n^2 f(4n)` for `n = 1..=n_max`.
pub fn verify_sbm_sandwich(profile: &ComplexityProfile, f: &GrowthTarget, n_max: usize) -> SandwichReport {
    let divisible = f.divisible();
    let mut rows = Vec::new();
    let mut complete = true;
    for n in 1..=n_max {
        let (f_n, f_4n) = match (f.eval(n as u64), f.eval(4 * n as u64)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                complete = false;
                continue;
            }
        };
        if 2 * n > profile.horizon {
            complete = false;
            continue;
        }
        let h_n = cumulative(profile, n);
        let h_2n = cumulative(profile, 2 * n);
        let nb = BigUint::from(n);
        let h_big = BigUint::from(h_n);
        rows.push(SandwichRow {
            n: n as u64,
            lower_ok: f_n <= BigUint::from(h_2n),
            f_n,
            h_2n,
            h_n,
            cubic_ok: h_big <= 64u32 * &nb * &nb * &nb * &f_4n,
            quadratic_ok: divisible.then(|| h_big <= 16u32 * &nb * &nb * &f_4n),
        });
    }
    SandwichReport { rows, complete }
}

/// One instance of `f(floor(N / delta(N))) <= w(2N)` on a leveled prefix.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationCheck {
    pub big_n: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub f_lhs: BigUint,
    pub w_2n: LeveledCount,
    pub holds: bool,
}

pub fn check_realization_chain(
    f: &GrowthTarget,
    schedule: &LevelSchedule,
    t_prefix: &WordPrefix,
    big_n: usize,
) -> Result<RealizationCheck> {
    let d = *schedule
        .delta
        .get(big_n)
        .ok_or_else(|| Error::invalid(format!("delta not tabulated at {big_n}")))?;
    let arg = (big_n as u64 / d.max(1)).max(1);
    let f_lhs = f
        .eval(arg)
        .ok_or_else(|| Error::invalid(format!("f not tabulated at {arg}")))?;
    let w = w_gamma_leveled_prefix(t_prefix, 2 * big_n)?;
    Ok(RealizationCheck {
        big_n: big_n as u64,
        holds: f_lhs <= BigUint::from(w.value),
        f_lhs,
        w_2n: w,
    })
}

/// Upper bound `h(n) n^2` on the leveled count, from the erased profile.
pub fn leveled_upper_bound(profile: &ComplexityProfile, n: usize) -> u64 {
    cumulative(profile, n) * (n as u64) * (n as u64)
}

/// `|W(1)| |C(1)| ... |C(2^{n-1})|`.
pub fn product_size(sets: &SBSets, n: usize) -> BigUint {
    sets.c[..n]
        .iter()
        .fold(BigUint::from(sets.alphabet()), |acc, c| acc * &c.count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{distinct_factors, profile_of_prefix};
    use num_traits::One;
    use proptest::prelude::*;

    fn doubling(k: usize) -> GrowthTarget {
        GrowthTarget::new((0..=k).map(|i| BigUint::one() << (i + 1)).collect()).unwrap()
    }

    fn sizes(s: &SBSets) -> Vec<u64> {
        s.w_sizes.iter().map(|v| v.to_u64().unwrap()).collect()
    }

    fn counts(s: &SBSets) -> Vec<u64> {
        s.c.iter().map(|v| v.count.to_u64().unwrap()).collect()
    }

    #[test]
    fn doubling_sets() {
        let s = build_sb_sets(&doubling(2), 2, false).unwrap();
        assert_eq!(sizes(&s), vec![2, 4, 8]);
        assert_eq!(counts(&s), vec![2, 2]);
        assert!(s.divisible_flag);
    }

    #[test]
    fn constant_target() {
        let f = GrowthTarget::from_u64s(&[2, 2, 2, 2]).unwrap();
        let s = build_sb_sets(&f, 3, false).unwrap();
        assert_eq!(counts(&s), vec![1, 1, 1]);
        assert_eq!(sizes(&s), vec![2, 2, 2, 2]);
    }

    #[test]
    fn non_divisible_sets() {
        let f = GrowthTarget::from_u64s(&[2, 3, 9]).unwrap();
        let s = build_sb_sets(&f, 2, false).unwrap();
        assert_eq!(counts(&s), vec![2, 3]);
        assert_eq!(sizes(&s), vec![2, 4, 12]);
        assert!(!s.divisible_flag);
    }

    #[test]
    fn invalid_targets() {
        assert!(GrowthTarget::from_u64s(&[2, 5]).is_err());
        assert!(GrowthTarget::from_u64s(&[3, 2]).is_err());
        assert!(GrowthTarget::from_u64s(&[0]).is_err());
        // A target that passes validation can still exceed |W|: f(1) = 1 forces |W| = 1.
        let f = GrowthTarget {
            values_at_pow2: vec![BigUint::one(), BigUint::from(2u32)],
        };
        assert!(matches!(
            build_sb_sets(&f, 1, false),
            Err(Error::ConstructionImpossible { .. })
        ));
    }

    #[test]
    fn words_are_lex_ordered_products() {
        let s = build_sb_sets(&doubling(3), 3, false).unwrap();
        let mut prev: Option<Vec<u32>> = None;
        for i in 0..8u32 {
            let w = s.word(3, &BigUint::from(i));
            assert_eq!(w.len(), 8);
            if let Some(p) = prev {
                assert!(p < w);
            }
            prev = Some(w);
        }
    }

    #[test]
    fn constant_s_prefix_is_eventually_periodic() {
        let f = GrowthTarget::from_u64s(&[2, 2, 2, 2]).unwrap();
        let s = build_sb_sets(&f, 3, false).unwrap();
        let p = generate_s_prefix(&s, 7).unwrap();
        // Singleton C's hold the all-zero word: 1 then zeros.
        assert_eq!(p.letters, vec![1, 0, 0, 0, 0, 0, 0]);
        assert!(p.letters[1..].windows(3).all(|w| w[0] == w[2]));
        assert_eq!(generate_s_prefix(&s, 1).unwrap().letters, vec![1]);
        assert!(matches!(generate_s_prefix(&s, 9), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn doubling_prefix_complexity() {
        let s = build_sb_sets(&doubling(6), 6, false).unwrap();
        let p = generate_s_prefix(&s, 64).unwrap();
        for m in 0..=3 {
            let n = 1usize << m;
            let have = distinct_factors(&p, n).unwrap() as u64;
            assert!(have >= 1u64 << m.min(1), "m = {m}: {have}");
        }
    }

    #[test]
    fn full_word_is_forced() {
        let f = GrowthTarget::from_u64s(&[2, 2, 2, 2, 2]).unwrap();
        let s = build_sb_sets(&f, 4, true).unwrap();
        // W(2) = {00, 10}: no element uses both letters, so C(1) keeps 0.
        assert_eq!(s.c[0].last_index, BigUint::zero());
        // From W(2) on, C(2^n) = {rho}.
        for n in 1..4 {
            let w = s.representative(n);
            assert!(w.contains(&0) && w.contains(&1), "level {n}");
        }
    }

    #[test]
    fn level_schedules() {
        let log: Vec<u64> = (0..40u64)
            .map(|i| if i == 0 { 0 } else { 64 - u64::from(i.leading_zeros()) })
            .collect();
        let s = build_level_schedule(&log, 3).unwrap();
        assert_eq!(s.n[2], 14);
        assert!(s.invariant_ok);
        let id: Vec<u64> = (0..20).collect();
        let s = build_level_schedule(&id, 5).unwrap();
        assert_eq!(s.n, vec![2, 4, 6, 8, 10]);
        let sqrt: Vec<u64> = (0..40u64).map(|i| (1..).find(|r: &u64| r * r >= i).unwrap()).collect();
        assert_eq!(build_level_schedule(&sqrt, 4).unwrap().n[3], 32);
        assert!(build_level_schedule(&[0, 1, 2, 1, 3], 1).is_err());
    }

    #[test]
    fn t_prefix_levels() {
        let f = GrowthTarget::from_u64s(&[2, 2, 2, 2, 2, 2, 2]).unwrap();
        let sets = build_sb_sets(&f, 6, false).unwrap();
        let id: Vec<u64> = (0..20).collect();
        let sched = build_level_schedule(&id, 4).unwrap();
        let t = generate_t_prefix(&sets, &sched, 32).unwrap();
        let lv = t.levels.clone().unwrap();
        assert!(lv.windows(2).all(|w| w[0] <= w[1]));
        // n_1 = 2: blocks up to C(4) occupy positions < 8.
        assert!(lv[..8].iter().all(|&l| l == 1));
        assert_eq!(lv[8], 2);
        let t64 = generate_t_prefix(&sets, &sched, 64).unwrap();
        assert_eq!(
            t64.erase_levels().letters,
            generate_s_prefix(&sets, 64).unwrap().letters
        );
    }

    #[test]
    fn leveled_counts() {
        let p = WordPrefix::with_levels(vec![0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0], vec![1; 12], "x").unwrap();
        assert_eq!(w_gamma_leveled_prefix(&p, 0).unwrap().value, 0);
        let want: usize = (1..=3).map(|m| distinct_factors(&p, m).unwrap()).sum();
        assert_eq!(w_gamma_leveled_prefix(&p, 3).unwrap().value, want as u64);
    }

    #[test]
    fn leveled_envelope() {
        let f = doubling(9);
        let sets = build_sb_sets(&f, 8, false).unwrap();
        let id: Vec<u64> = (0..20).collect();
        let sched = build_level_schedule(&id, 8).unwrap();
        let t = generate_t_prefix(&sets, &sched, 256).unwrap();
        let v = w_gamma_leveled_prefix(&t, 8).unwrap().value;
        assert!(BigUint::from(v) >= f.eval(1).unwrap());
        assert!(BigUint::from(v) <= 64u32 * BigUint::from(8u32).pow(5) * f.eval(32).unwrap());
        let profile = profile_of_prefix(&t.erase_levels(), 16).unwrap();
        assert!(v <= leveled_upper_bound(&profile, 8));
    }

    #[test]
    fn leveled_table_matches_pointwise() {
        let f = doubling(9);
        let sets = build_sb_sets(&f, 9, false).unwrap();
        let id: Vec<u64> = (0..20).collect();
        let sched = build_level_schedule(&id, 8).unwrap();
        let t = generate_t_prefix(&sets, &sched, 512).unwrap();
        let table = w_gamma_leveled_table(&t, 24).unwrap();
        for (n, row) in table.iter().enumerate() {
            assert_eq!(*row, w_gamma_leveled_prefix(&t, n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn realization_chain_small() {
        let f = doubling(12);
        let sets = build_sb_sets(&f, 12, false).unwrap();
        let id: Vec<u64> = (0..40).collect();
        let sched = build_level_schedule(&id, 12).unwrap();
        let t = generate_t_prefix(&sets, &sched, 1 << 12).unwrap();
        for big_n in [4usize, 8, 16, 32] {
            let c = check_realization_chain(&f, &sched, &t, big_n).unwrap();
            assert!(c.holds, "N = {big_n}: {c:?}");
        }
    }

    #[test]
    fn sandwich_divisible() {
        let f = doubling(10);
        let sets = build_sb_sets(&f, 10, false).unwrap();
        let p = generate_s_prefix(&sets, 1 << 10).unwrap();
        let profile = profile_of_prefix(&p, 128).unwrap();
        let rep = verify_sbm_sandwich(&profile, &f, 64);
        assert!(
            rep.all_ok(),
            "{:?}",
            rep.rows.iter().find(|r| !(r.lower_ok && r.cubic_ok))
        );
    }

    proptest! {
        #[test]
        fn set_sizes_within_bounds(ratios in prop::collection::vec(1u64..4, 1..6), a in 2u64..4) {
            let mut v = vec![a];
            for r in &ratios {
                let last = *v.last().unwrap();
                v.push((last * r).min(last * last).max(last));
            }
            let f = GrowthTarget::from_u64s(&v).unwrap();
            let sets = build_sb_sets(&f, ratios.len(), false).unwrap();
            for n in 0..=ratios.len() {
                let size = &sets.w_sizes[n];
                prop_assert!(size >= &f.values_at_pow2[n]);
                prop_assert!(size <= &((BigUint::one() << n) * &f.values_at_pow2[n]));
                prop_assert_eq!(size, &product_size(&sets, n));
            }
        }

        #[test]
        fn erasure_commutes(len in 1usize..128) {
            let f = doubling(8);
            let sets = build_sb_sets(&f, 8, false).unwrap();
            let id: Vec<u64> = (0..20).collect();
            let sched = build_level_schedule(&id, 8).unwrap();
            let t = generate_t_prefix(&sets, &sched, len).unwrap();
            prop_assert_eq!(t.erase_levels().letters, generate_s_prefix(&sets, len).unwrap().letters);
        }

        #[test]
        fn leveled_count_monotone(n in 1usize..16) {
            let f = doubling(8);
            let sets = build_sb_sets(&f, 8, false).unwrap();
            let id: Vec<u64> = (0..20).collect();
            let sched = build_level_schedule(&id, 8).unwrap();
            let t = generate_t_prefix(&sets, &sched, 256).unwrap();
            let a = w_gamma_leveled_prefix(&t, n).unwrap().value;
            let b = w_gamma_leveled_prefix(&t, n + 1).unwrap().value;
            prop_assert!(a <= b);
        }
    }
}
