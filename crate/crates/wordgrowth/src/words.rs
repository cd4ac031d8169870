//! Words over integer alphabets and exact factor counting.
//!
//! Windows are bucketed by a polynomial rolling hash modulo the Mersenne prime
//! 2^61 - 1. Every bucket keeps one representative per distinct window and a
//! new window is compared letter by letter against the representatives of its
//! bucket, so collisions never merge distinct factors.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A letter with an optional level decoration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub index: u32,
    pub level: Option<u32>,
}

/// A finite word; levels are stored only for leveled streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPrefix {
    pub letters: Vec<u32>,
    pub levels: Option<Vec<u32>>,
    pub source_id: String,
}

impl WordPrefix {
    pub fn new(letters: Vec<u32>, source_id: impl Into<String>) -> Self {
        WordPrefix {
            letters,
            levels: None,
            source_id: source_id.into(),
        }
    }

    pub fn with_levels(letters: Vec<u32>, levels: Vec<u32>, source_id: impl Into<String>) -> Result<Self> {
        if letters.len() != levels.len() {
            return Err(Error::invalid("letters and levels differ in length"));
        }
        if levels.contains(&0) {
            return Err(Error::invalid("levels must be at least 1"));
        }
        Ok(WordPrefix {
            letters,
            levels: Some(levels),
            source_id: source_id.into(),
        })
    }

    pub fn from_str_letters(s: &str) -> Self {
        WordPrefix::new(s.bytes().map(u32::from).collect(), "literal")
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letter(&self, i: usize) -> Letter {
        Letter {
            index: self.letters[i],
            level: self.levels.as_ref().map(|l| l[i]),
        }
    }

    /// Symbol codes combining level and index, so leveled letters compare as pairs.
    pub fn codes(&self) -> Vec<u64> {
        match &self.levels {
            None => self.letters.iter().map(|&a| u64::from(a)).collect(),
            Some(levels) => self
                .letters
                .iter()
                .zip(levels)
                .map(|(&a, &l)| (u64::from(l) << 32) | u64::from(a))
                .collect(),
        }
    }

    /// The word with its level decoration removed.
    pub fn erase_levels(&self) -> WordPrefix {
        WordPrefix::new(self.letters.clone(), self.source_id.clone())
    }

    pub fn truncate(&self, len: usize) -> WordPrefix {
        WordPrefix {
            letters: self.letters[..len].to_vec(),
            levels: self.levels.as_ref().map(|l| l[..len].to_vec()),
            source_id: self.source_id.clone(),
        }
    }

    /// Space-separated `level:index` or bare `index` tokens.
    pub fn to_line(&self) -> String {
        let mut out = String::with_capacity(self.letters.len() * 3);
        for i in 0..self.letters.len() {
            if i > 0 {
                out.push(' ');
            }
            match &self.levels {
                Some(levels) => write!(out, "{}:{}", levels[i], self.letters[i]).unwrap(),
                None => write!(out, "{}", self.letters[i]).unwrap(),
            }
        }
        out
    }

    pub fn parse_line(line: &str, source_id: impl Into<String>) -> Result<WordPrefix> {
        let mut letters = Vec::new();
        let mut levels = Vec::new();
        let mut leveled = None;
        for tok in line.split_whitespace() {
            let bad = || Error::invalid(format!("bad letter token {tok:?}"));
            let (level, index) = match tok.split_once(':') {
                Some((l, i)) => (Some(l.parse::<u32>().map_err(|_| bad())?), i),
                None => (None, tok),
            };
            let index = index.parse::<u32>().map_err(|_| bad())?;
            match (leveled, level) {
                (None, l) => leveled = Some(l.is_some()),
                (Some(true), None) | (Some(false), Some(_)) => {
                    return Err(Error::invalid("mixed leveled and plain tokens"))
                }
                _ => {}
            }
            letters.push(index);
            if let Some(l) = level {
                levels.push(l);
            }
        }
        if leveled == Some(true) {
            WordPrefix::with_levels(letters, levels, source_id)
        } else {
            Ok(WordPrefix::new(letters, source_id))
        }
    }
}

/// An on-demand source of prefixes of an infinite word.
pub trait WordStream {
    fn id(&self) -> String;
    fn prefix(&self, len: usize) -> Result<WordPrefix>;
}

/// `pattern^∞`.
#[derive(Debug, Clone)]
pub struct Periodic {
    pub pattern: Vec<u32>,
}

impl Periodic {
    pub fn new(pattern: Vec<u32>) -> Self {
        assert!(!pattern.is_empty(), "empty period");
        Periodic { pattern }
    }
}

impl WordStream for Periodic {
    fn id(&self) -> String {
        format!("periodic({:?})", self.pattern)
    }

    fn prefix(&self, len: usize) -> Result<WordPrefix> {
        let q = self.pattern.len();
        Ok(WordPrefix::new(
            (0..len).map(|i| self.pattern[i % q]).collect(),
            self.id(),
        ))
    }
}

/// The Thue–Morse word `t_i = popcount(i) mod 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThueMorse;

impl WordStream for ThueMorse {
    fn id(&self) -> String {
        "thue-morse".into()
    }

    fn prefix(&self, len: usize) -> Result<WordPrefix> {
        Ok(WordPrefix::new(
            (0..len).map(|i| (i as u64).count_ones() % 2).collect(),
            self.id(),
        ))
    }
}

/// A stream given letter by letter.
pub struct FnStream<F: Fn(usize) -> u32> {
    pub name: String,
    pub letter: F,
}

impl<F: Fn(usize) -> u32> WordStream for FnStream<F> {
    fn id(&self) -> String {
        self.name.clone()
    }

    fn prefix(&self, len: usize) -> Result<WordPrefix> {
        Ok(WordPrefix::new((0..len).map(&self.letter).collect(), self.name.clone()))
    }
}

/// A finite word used as a stream; longer prefixes are refused.
#[derive(Debug, Clone)]
pub struct Materialized(pub WordPrefix);

impl WordStream for Materialized {
    fn id(&self) -> String {
        self.0.source_id.clone()
    }

    fn prefix(&self, len: usize) -> Result<WordPrefix> {
        if len > self.0.len() {
            return Err(Error::invalid(format!(
                "stream {} materialized to {} letters, asked for {len}",
                self.0.source_id,
                self.0.len()
            )));
        }
        Ok(self.0.truncate(len))
    }
}

const MODULUS: u64 = (1 << 61) - 1;
const BASE: u64 = 0x1f3d_5b79_a4c2_e861 % MODULUS;

fn mul_mod(a: u64, b: u64) -> u64 {
    let p = u128::from(a) * u128::from(b);
    let lo = (p as u64) & MODULUS;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= MODULUS {
        s - MODULUS
    } else {
        s
    }
}

fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MODULUS {
        s - MODULUS
    } else {
        s
    }
}

/// Prefix hashes and powers for constant-time window hashing.
struct RollingHash {
    prefix: Vec<u64>,
    power: Vec<u64>,
}

impl RollingHash {
    fn new(codes: &[u64]) -> Self {
        let mut prefix = Vec::with_capacity(codes.len() + 1);
        let mut power = Vec::with_capacity(codes.len() + 1);
        prefix.push(0);
        power.push(1);
        for &c in codes {
            let h = *prefix.last().unwrap();
            prefix.push(add_mod(mul_mod(h, BASE), (c % MODULUS + 1) % MODULUS));
            power.push(mul_mod(*power.last().unwrap(), BASE));
        }
        RollingHash { prefix, power }
    }

    fn window(&self, start: usize, n: usize) -> u64 {
        let hi = self.prefix[start + n];
        let lo = mul_mod(self.prefix[start], self.power[n]);
        add_mod(hi, MODULUS - lo)
    }
}

/// One distinct window: first occurrence and number of occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorClass {
    pub first: usize,
    pub count: usize,
}

/// Distinct length-`n` windows of `codes`, ordered by first occurrence.
pub fn factor_classes(codes: &[u64], n: usize) -> Vec<FactorClass> {
    if n == 0 || n > codes.len() {
        return Vec::new();
    }
    let rh = RollingHash::new(codes);
    factor_classes_with(&rh, codes, n)
}

fn factor_classes_with(rh: &RollingHash, codes: &[u64], n: usize) -> Vec<FactorClass> {
    let mut classes: Vec<FactorClass> = Vec::new();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for start in 0..=codes.len() - n {
        let bucket = buckets.entry(rh.window(start, n)).or_default();
        let window = &codes[start..start + n];
        match bucket
            .iter()
            .find(|&&ci| &codes[classes[ci].first..classes[ci].first + n] == window)
        {
            Some(&ci) => classes[ci].count += 1,
            None => {
                bucket.push(classes.len());
                classes.push(FactorClass { first: start, count: 1 });
            }
        }
    }
    classes
}

/// Distinct windows for every length `1..=n_max`, sharing one hash table.
pub fn factor_classes_upto(codes: &[u64], n_max: usize) -> Vec<Vec<FactorClass>> {
    let rh = RollingHash::new(codes);
    (1..=n_max.min(codes.len()))
        .map(|n| factor_classes_with(&rh, codes, n))
        .collect()
}

/// Number of distinct length-`n` blocks of the prefix.
pub fn distinct_factors(prefix: &WordPrefix, n: usize) -> Result<usize> {
    if n == 0 || n > prefix.len() {
        return Err(Error::invalid(format!(
            "factor length {n} outside 1..={}",
            prefix.len()
        )));
    }
    Ok(factor_classes(&prefix.codes(), n).len())
}

/// Per-length factor counts of a finite prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    /// `values[n - 1] = p(n)`.
    pub values: Vec<u64>,
    pub certified: Vec<bool>,
    pub horizon: usize,
    pub prefix_len: usize,
}

impl ComplexityProfile {
    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// `p(n)` with the empty-word convention `p(0) = 1`.
    pub fn p(&self, n: usize) -> u64 {
        if n == 0 {
            1
        } else {
            self.values[n - 1]
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p,certified\n");
        for (i, (p, c)) in self.values.iter().zip(&self.certified).enumerate() {
            writeln!(out, "{},{},{}", i + 1, p, c).unwrap();
        }
        out
    }
}

/// Complexity profile of an explicit prefix.
pub fn profile_of_prefix(prefix: &WordPrefix, n_max: usize) -> Result<ComplexityProfile> {
    let len = prefix.len();
    if n_max == 0 || len < 2 * n_max {
        return Err(Error::invalid(format!(
            "prefix length {len} below 2 * n_max = {}",
            2 * n_max
        )));
    }
    let all = factor_classes_upto(&prefix.codes(), n_max);
    let mut values = Vec::with_capacity(n_max);
    let mut certified = Vec::with_capacity(n_max);
    let mut horizon = 0;
    for (i, classes) in all.iter().enumerate() {
        let n = i + 1;
        let ok = classes.iter().all(|c| c.count >= 2 || c.first <= len - 2 * n);
        if ok && horizon == n - 1 {
            horizon = n;
        }
        values.push(classes.len() as u64);
        certified.push(ok);
    }
    Ok(ComplexityProfile {
        values,
        certified,
        horizon,
        prefix_len: len,
    })
}

/// Factor complexity `p(1..=n_max)` measured on a length-`prefix_len` prefix.
pub fn complexity_profile(stream: &dyn WordStream, n_max: usize, prefix_len: usize) -> Result<ComplexityProfile> {
    if n_max == 0 || prefix_len < 2 * n_max {
        return Err(Error::invalid(format!(
            "prefix_len {prefix_len} below 2 * n_max = {}",
            2 * n_max
        )));
    }
    profile_of_prefix(&stream.prefix(prefix_len)?, n_max)
}

fn occurrences(hay: &[u64], needle: &[u64]) -> Vec<usize> {
    if needle.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - needle.len())
        .filter(|&i| &hay[i..i + needle.len()] == needle)
        .collect()
}

/// Largest gap between consecutive occurrences of `factor` in the length-`horizon`
/// prefix, or `None` when it occurs fewer than twice.
pub fn recurrence_gap(stream: &dyn WordStream, factor: &WordPrefix, horizon: usize) -> Result<Option<usize>> {
    if factor.is_empty() {
        return Err(Error::invalid("empty factor"));
    }
    let hay = stream.prefix(horizon)?.codes();
    let occ = occurrences(&hay, &factor.codes());
    if occ.len() < 2 {
        return Ok(None);
    }
    Ok(occ.windows(2).map(|w| w[1] - w[0]).max())
}

/// Smallest `C` such that every length-`C` window of the prefix contains every
/// length-`l` factor of the prefix; `None` if that needs more than `horizon / 2`.
pub fn uniform_recurrence_witness(stream: &dyn WordStream, l: usize, horizon: usize) -> Result<Option<usize>> {
    if l == 0 || horizon < 4 * l {
        return Err(Error::invalid(format!("horizon {horizon} below 4 * l = {}", 4 * l)));
    }
    let codes = stream.prefix(horizon)?.codes();
    let rh = RollingHash::new(&codes);
    let classes = factor_classes_with(&rh, &codes, l);
    // Occurrence lists per class, rebuilt by a second hashed pass.
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, c) in classes.iter().enumerate() {
        buckets.entry(rh.window(c.first, l)).or_default().push(i);
    }
    let mut occ: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for start in 0..=horizon - l {
        let window = &codes[start..start + l];
        let ci = buckets[&rh.window(start, l)]
            .iter()
            .copied()
            .find(|&ci| &codes[classes[ci].first..classes[ci].first + l] == window)
            .expect("every window has a class");
        occ[ci].push(start);
    }
    let mut need = l;
    for positions in &occ {
        let first = positions[0];
        let last = *positions.last().unwrap();
        need = need.max(first + l).max(horizon - last);
        for w in positions.windows(2) {
            need = need.max(w[1] - w[0] + l - 1);
        }
    }
    Ok(if need <= horizon / 2 { Some(need) } else { None })
}
