//! Costed letters under block-nilpotency rules, and the staged schedule that
//! makes the map growth swing between a slow and a fast target.
//!
//! A word is nonzero when, for every threshold `M`, it has no run of `d_M`
//! consecutive letters whose indices are all at most `M`. Only thresholds equal
//! to a letter index matter (between two indices the rule for the smaller one
//! is stronger, since `d` is non-decreasing), and a threshold whose run limit
//! exceeds the longest admissible word never binds. The counting automaton
//! therefore tracks one run length per binding threshold.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostedLetter {
    /// 1-based letter index.
    pub index: u64,
    /// Least `j` with the letter in the image of the `j`-th power of the generating space.
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostedAlphabet {
    pub letters: Vec<CostedLetter>,
}

impl CostedAlphabet {
    pub fn new(letters: Vec<CostedLetter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::invalid("empty alphabet"));
        }
        if letters.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::invalid("letter indices must increase"));
        }
        if letters.iter().any(|l| l.index == 0 || l.cost == 0) {
            return Err(Error::invalid("indices and costs start at 1"));
        }
        Ok(CostedAlphabet { letters })
    }

    fn min_cost(&self) -> u64 {
        self.letters.iter().map(|l| l.cost).min().unwrap()
    }

    fn max_cost(&self) -> u64 {
        self.letters.iter().map(|l| l.cost).max().unwrap()
    }
}

/// `d[M - 1] = d_M`: no run of `d_M` letters with indices `<= M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForbiddenBlockRules {
    pub d: Vec<u64>,
}

impl ForbiddenBlockRules {
    pub fn new(d: Vec<u64>) -> Result<Self> {
        if d.iter().any(|&x| x < 2) {
            return Err(Error::invalid("every d_M must be at least 2"));
        }
        if d.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("d must be non-decreasing"));
        }
        Ok(ForbiddenBlockRules { d })
    }

    pub fn constant(value: u64, m_max: usize) -> Result<Self> {
        ForbiddenBlockRules::new(vec![value; m_max])
    }

    pub fn at(&self, m: u64) -> Option<u64> {
        self.d.get(usize::try_from(m).ok()?.checked_sub(1)?).copied()
    }
}

/// Per-letter transition data over the binding thresholds.
struct Automaton {
    costs: Vec<u64>,
    /// `below[l][j]`: letter `l` has index at most threshold `j`.
    below: Vec<Vec<bool>>,
    limits: Vec<u64>,
}

impl Automaton {
    fn new(alphabet: &CostedAlphabet, rules: &ForbiddenBlockRules, max_len: u64) -> Result<Self> {
        let mut thresholds = Vec::new();
        let mut limits = Vec::new();
        for l in &alphabet.letters {
            let d = rules.at(l.index).ok_or_else(|| {
                Error::invalid(format!(
                    "rules tabulated to {}, letter index {}",
                    rules.d.len(),
                    l.index
                ))
            })?;
            if d <= max_len {
                thresholds.push(l.index);
                limits.push(d);
            }
        }
        let below = alphabet
            .letters
            .iter()
            .map(|l| thresholds.iter().map(|&t| l.index <= t).collect())
            .collect();
        Ok(Automaton {
            costs: alphabet.letters.iter().map(|l| l.cost).collect(),
            below,
            limits,
        })
    }

    fn step(&self, state: &[u64], letter: usize) -> Option<Vec<u64>> {
        let mut next = Vec::with_capacity(state.len());
        for (j, &run) in state.iter().enumerate() {
            if self.below[letter][j] {
                let r = run + 1;
                if r >= self.limits[j] {
                    return None;
                }
                next.push(r);
            } else {
                next.push(0);
            }
        }
        Some(next)
    }
}

/// Number of nonzero nonempty words of total cost at most `budget`.
pub fn count_nonzero_monomials(alphabet: &CostedAlphabet, rules: &ForbiddenBlockRules, budget: u64) -> Result<BigUint> {
    let max_len = budget / alphabet.min_cost();
    let auto = Automaton::new(alphabet, rules, max_len)?;
    let n = usize::try_from(budget).map_err(|_| Error::invalid("budget too large for the cost table"))?;
    let start: Vec<u64> = vec![0; auto.limits.len()];
    // layers[c]: states of words of cost exactly c.
    let mut layers: Vec<HashMap<Vec<u64>, BigUint>> = vec![HashMap::new(); n + 1];
    layers[0].insert(start, BigUint::one());
    let mut total = BigUint::zero();
    for c in 0..=n {
        let layer = std::mem::take(&mut layers[c]);
        for (state, count) in &layer {
            if c > 0 {
                total += count;
            }
            for (l, &cost) in auto.costs.iter().enumerate() {
                let nc = c + cost as usize;
                if nc > n {
                    continue;
                }
                if let Some(next) = auto.step(state, l) {
                    *layers[nc].entry(next).or_default() += count;
                }
            }
        }
    }
    Ok(total)
}

/// Number of all nonzero nonempty words, finite because the run limit of the
/// largest index caps the word length.
pub fn unlimited_count(alphabet: &CostedAlphabet, rules: &ForbiddenBlockRules) -> Result<BigUint> {
    let top = alphabet.letters.last().unwrap().index;
    let d_top = rules
        .at(top)
        .ok_or_else(|| Error::invalid(format!("rules tabulated to {}, letter index {top}", rules.d.len())))?;
    let max_len = d_top - 1;
    // The top threshold is enforced by the length cap itself.
    let auto = Automaton::new(alphabet, rules, max_len)?;
    let mut layer: HashMap<Vec<u64>, BigUint> = HashMap::new();
    layer.insert(vec![0; auto.limits.len()], BigUint::one());
    let mut total = BigUint::zero();
    for _ in 0..max_len {
        let mut next: HashMap<Vec<u64>, BigUint> = HashMap::new();
        for (state, count) in &layer {
            for l in 0..auto.costs.len() {
                if let Some(s) = auto.step(state, l) {
                    *next.entry(s).or_default() += count;
                }
            }
        }
        total += next.values().sum::<BigUint>();
        layer = next;
    }
    Ok(total)
}

/// Largest total cost of a nonzero word.
pub fn max_word_cost(alphabet: &CostedAlphabet, rules: &ForbiddenBlockRules) -> Result<u64> {
    let top = alphabet.letters.last().unwrap().index;
    let d_top = rules.at(top).ok_or_else(|| Error::invalid("rules too short"))?;
    Ok((d_top - 1) * alphabet.max_cost())
}

/// Map growth at an arbitrary budget: the plateau value once the budget covers
/// every nonzero word, the cost recursion otherwise.
pub fn count_at(alphabet: &CostedAlphabet, rules: &ForbiddenBlockRules, budget: &BigUint) -> Result<BigUint> {
    let cap = max_word_cost(alphabet, rules)?;
    if budget >= &BigUint::from(cap) {
        return unlimited_count(alphabet, rules);
    }
    let b = budget.to_u64().unwrap();
    let usable: Vec<CostedLetter> = alphabet.letters.iter().copied().filter(|l| l.cost <= b).collect();
    if usable.is_empty() {
        return Ok(BigUint::zero());
    }
    count_nonzero_monomials(&CostedAlphabet::new(usable)?, rules, b)
}

/// Largest exponent `TwoPowFloorSqrt` materializes; beyond it `eval` is `None`.
pub const EVAL_BITS_LIMIT: u64 = 1 << 26;

/// A monotone target function on big arguments.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetFn {
    /// `values[n]` for `n` inside the table.
    Table {
        #[serde_as(as = "Vec<DisplayFromStr>")]
        values: Vec<BigUint>,
    },
    FloorSqrt,
    TwoPowFloorSqrt,
    Constant {
        #[serde_as(as = "DisplayFromStr")]
        value: BigUint,
    },
}

impl TargetFn {
    pub fn eval(&self, n: &BigUint) -> Option<BigUint> {
        match self {
            TargetFn::Table { values } => values.get(n.to_usize()?).cloned(),
            TargetFn::FloorSqrt => Some(n.sqrt()),
            TargetFn::TwoPowFloorSqrt => {
                let e = n.sqrt().to_u64().filter(|&e| e <= EVAL_BITS_LIMIT)?;
                Some(BigUint::one() << e)
            }
            TargetFn::Constant { value } => Some(value.clone()),
        }
    }

    /// Least `m > lo` with `f(m) >= target`.
    pub fn least_above_reaching(&self, lo: &BigUint, target: &BigUint) -> Option<BigUint> {
        let next = lo + 1u32;
        match self {
            TargetFn::Table { values } => {
                let start = next.to_usize()?;
                (start..values.len()).find(|&m| &values[m] >= target).map(BigUint::from)
            }
            TargetFn::FloorSqrt => Some(std::cmp::max(next, target * target)),
            TargetFn::TwoPowFloorSqrt => {
                let bits = if target.is_zero() { 0 } else { target.bits() - 1 };
                let e = if target > &(BigUint::one() << bits) {
                    bits + 1
                } else {
                    bits
                };
                let sq = BigUint::from(e) * e;
                Some(std::cmp::max(next, sq))
            }
            TargetFn::Constant { value } => (value >= target).then_some(next),
        }
    }
}

/// One completed stage of the schedule.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    #[serde_as(as = "DisplayFromStr")]
    pub n: BigUint,
    /// Exact count of all nonzero words over the letters of stages `<= i`.
    #[serde_as(as = "DisplayFromStr")]
    pub k: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub m: BigUint,
}

/// `d` takes the value `value` on `from..=to`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DRange {
    #[serde_as(as = "DisplayFromStr")]
    pub from: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub to: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub value: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscSchedule {
    pub p: u64,
    pub stages: Vec<Stage>,
    pub d_ranges: Vec<DRange>,
    pub alphabet: CostedAlphabet,
    pub rules: ForbiddenBlockRules,
    pub f1: TargetFn,
    pub f2: TargetFn,
}

const SEARCH_LIMIT: u64 = 1 << 20;

/// Builds `stages` stages of the schedule.
pub fn build_osc_schedule(f1: &TargetFn, f2: &TargetFn, stages: usize) -> Result<OscSchedule> {
    let p = (1..SEARCH_LIMIT)
        .find(|&p| {
            f2.eval(&BigUint::from(2 * p))
                .map(|v| v < BigUint::one() << p)
                .unwrap_or(false)
        })
        .ok_or_else(|| Error::NoValidN {
            stage: 1,
            detail: "no p with f2(2p) < 2^p in range".into(),
        })?;
    let n1 = 2 * p;
    let mut letters = vec![CostedLetter { index: 1, cost: 2 }, CostedLetter { index: 2, cost: 2 }];
    let mut d: BTreeMap<u64, u64> = BTreeMap::new();
    let mut d_ranges = vec![DRange {
        from: BigUint::one(),
        to: BigUint::from(n1),
        value: BigUint::from(p + 1),
    }];
    d.insert(1, p + 1);
    d.insert(2, p + 1);
    let mut out = Vec::new();
    let mut n_i = BigUint::from(n1);
    for stage in 1..=stages {
        let alphabet = CostedAlphabet::new(letters.clone())?;
        let rules = rules_from(&d, &letters)?;
        let k = unlimited_count(&alphabet, &rules)?;
        let m = f1.least_above_reaching(&n_i, &k).ok_or_else(|| Error::TableExhausted {
            stage,
            detail: format!("f1 never reaches K = {k} above n = {n_i}"),
        })?;
        let d_here = d_ranges.last().unwrap().value.clone();
        d_ranges.push(DRange {
            from: &n_i + 1u32,
            to: m.clone(),
            value: d_here,
        });
        out.push(Stage {
            n: n_i.clone(),
            k,
            m: m.clone(),
        });
        if stage == stages {
            break;
        }
        let step = m
            .to_u64()
            .filter(|&x| x < SEARCH_LIMIT)
            .ok_or_else(|| Error::NoValidN {
                stage: stage + 1,
                detail: format!("m = {m} is beyond desk scale"),
            })?
            + 2;
        let mut found = None;
        for q in 1..SEARCH_LIMIT {
            let n = q * step;
            match f2.eval(&BigUint::from(n)) {
                Some(v) if v <= BigUint::one() << q => {
                    found = Some(n);
                    break;
                }
                Some(_) => {}
                None => break,
            }
        }
        let n_next = found.ok_or_else(|| Error::NoValidN {
            stage: stage + 1,
            detail: format!("no multiple n of {step} with f2(n) <= 2^(n/{step}) in range"),
        })?;
        d_ranges.push(DRange {
            from: BigUint::from(step - 1),
            to: BigUint::from(n_next),
            value: BigUint::from(n_next + 1),
        });
        for idx in [step - 1, step] {
            letters.push(CostedLetter { index: idx, cost: step });
            d.insert(idx, n_next + 1);
        }
        n_i = BigUint::from(n_next);
    }
    let alphabet = CostedAlphabet::new(letters.clone())?;
    let rules = rules_from(&d, &letters)?;
    Ok(OscSchedule {
        p,
        stages: out,
        d_ranges,
        alphabet,
        rules,
        f1: f1.clone(),
        f2: f2.clone(),
    })
}

/// Tabulates `d` up to the largest letter index from the values at letter indices.
fn rules_from(d: &BTreeMap<u64, u64>, letters: &[CostedLetter]) -> Result<ForbiddenBlockRules> {
    let top = letters.last().unwrap().index;
    let mut table = Vec::with_capacity(top as usize);
    for m in 1..=top {
        // Between letter indices the rule coincides with the one at the previous index.
        let v = d.range(..=m).next_back().map(|(_, &v)| v).unwrap();
        table.push(v);
    }
    ForbiddenBlockRules::new(table)
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCheck {
    pub stage: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub n: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub w_at_n: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub f2_at_n: BigUint,
    pub fast_ok: bool,
    #[serde_as(as = "DisplayFromStr")]
    pub m: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub w_at_m: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub f1_at_m: BigUint,
    pub slow_ok: bool,
    /// `w(m_i) = K_i`: no letter of a later stage is affordable at `m_i`.
    pub plateau: bool,
}

/// Exact map growth at every scheduled point, with letters priced out of the
/// budget contributing nothing.
pub fn verify_oscillation(schedule: &OscSchedule) -> Result<Vec<StageCheck>> {
    let mut out = Vec::new();
    for (i, st) in schedule.stages.iter().enumerate() {
        let w_n = count_at(&schedule.alphabet, &schedule.rules, &st.n)?;
        let w_m = count_at(&schedule.alphabet, &schedule.rules, &st.m)?;
        let f2n = schedule.f2.eval(&st.n).ok_or_else(|| Error::TableExhausted {
            stage: i + 1,
            detail: "f2 table ends before n".into(),
        })?;
        let f1m = schedule.f1.eval(&st.m).ok_or_else(|| Error::TableExhausted {
            stage: i + 1,
            detail: "f1 table ends before m".into(),
        })?;
        out.push(StageCheck {
            stage: i + 1,
            n: st.n.clone(),
            fast_ok: w_n >= f2n,
            w_at_n: w_n,
            f2_at_n: f2n,
            m: st.m.clone(),
            slow_ok: w_m <= f1m,
            plateau: w_m == st.k,
            w_at_m: w_m,
            f1_at_m: f1m,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alphabet(costs: &[u64]) -> CostedAlphabet {
        CostedAlphabet::new(
            costs
                .iter()
                .enumerate()
                .map(|(i, &c)| CostedLetter {
                    index: i as u64 + 1,
                    cost: c,
                })
                .collect(),
        )
        .unwrap()
    }

    /// Enumerates every word of cost at most `budget` and checks the rules directly.
    fn brute(alpha: &CostedAlphabet, rules: &ForbiddenBlockRules, budget: u64) -> u64 {
        fn ok(word: &[u64], rules: &ForbiddenBlockRules) -> bool {
            for (m, &dm) in rules.d.iter().enumerate() {
                let m = m as u64 + 1;
                let dm = dm as usize;
                if word.len() >= dm && word.windows(dm).any(|w| w.iter().all(|&i| i <= m)) {
                    return false;
                }
            }
            true
        }
        fn go(alpha: &CostedAlphabet, rules: &ForbiddenBlockRules, left: u64, word: &mut Vec<u64>, count: &mut u64) {
            for l in &alpha.letters {
                if l.cost <= left {
                    word.push(l.index);
                    if ok(word, rules) {
                        *count += 1;
                        go(alpha, rules, left - l.cost, word, count);
                    }
                    word.pop();
                }
            }
        }
        let mut count = 0;
        go(alpha, rules, budget, &mut Vec::new(), &mut count);
        count
    }

    #[test]
    fn count_examples() {
        let d4 = ForbiddenBlockRules::constant(4, 2).unwrap();
        assert_eq!(
            count_nonzero_monomials(&alphabet(&[2, 2]), &d4, 6).unwrap(),
            BigUint::from(14u32)
        );
        assert_eq!(
            count_nonzero_monomials(&alphabet(&[2, 2]), &d4, 1).unwrap(),
            BigUint::zero()
        );
        let d3 = ForbiddenBlockRules::constant(3, 1).unwrap();
        assert_eq!(
            count_nonzero_monomials(&alphabet(&[2]), &d3, 10).unwrap(),
            BigUint::from(2u32)
        );
    }

    #[test]
    fn short_rules_rejected() {
        let d = ForbiddenBlockRules::constant(3, 1).unwrap();
        assert!(matches!(
            count_nonzero_monomials(&alphabet(&[1, 1]), &d, 5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unlimited_is_plateau() {
        let a = alphabet(&[2, 3, 5]);
        let d = ForbiddenBlockRules::new(vec![2, 3, 4]).unwrap();
        let k = unlimited_count(&a, &d).unwrap();
        let cap = max_word_cost(&a, &d).unwrap();
        assert_eq!(count_nonzero_monomials(&a, &d, cap).unwrap(), k);
        assert_eq!(count_nonzero_monomials(&a, &d, cap + 7).unwrap(), k);
        assert_eq!(BigUint::from(brute(&a, &d, cap)), k);
    }

    #[test]
    fn sqrt_schedule_first_stage() {
        let s = build_osc_schedule(&TargetFn::FloorSqrt, &TargetFn::TwoPowFloorSqrt, 1).unwrap();
        assert_eq!(s.p, 3);
        assert_eq!(s.stages[0].n, BigUint::from(6u32));
        assert_eq!(s.stages[0].k, BigUint::from(14u32));
        assert_eq!(s.stages[0].m, BigUint::from(196u32));
        let checks = verify_oscillation(&s).unwrap();
        assert_eq!(checks[0].w_at_n, BigUint::from(14u32));
        assert_eq!(checks[0].f2_at_n, BigUint::from(4u32));
        assert!(checks[0].fast_ok && checks[0].slow_ok && checks[0].plateau);
    }

    #[test]
    fn sqrt_schedule_two_stages() {
        let s = build_osc_schedule(&TargetFn::FloorSqrt, &TargetFn::TwoPowFloorSqrt, 2).unwrap();
        assert_eq!(s.stages[1].n, BigUint::from(38808u32));
        for c in verify_oscillation(&s).unwrap() {
            assert!(c.fast_ok && c.slow_ok && c.plateau, "stage {}", c.stage);
        }
    }

    #[test]
    fn constant_targets() {
        let one = TargetFn::Constant { value: BigUint::one() };
        let err = build_osc_schedule(&one, &one, 1).unwrap_err();
        assert!(matches!(err, Error::TableExhausted { stage: 1, .. }));
        let table = TargetFn::Table {
            values: vec![BigUint::one(); 50],
        };
        assert!(matches!(
            build_osc_schedule(&table, &table, 1),
            Err(Error::TableExhausted { .. })
        ));
        // p = 1 and K = 2 with d = 2 on two letters.
        let two = TargetFn::Constant {
            value: BigUint::from(2u32),
        };
        let s = build_osc_schedule(&two, &one, 1).unwrap();
        assert_eq!(s.p, 1);
        assert_eq!(s.stages[0].n, BigUint::from(2u32));
        assert_eq!(s.stages[0].k, BigUint::from(2u32));
        assert_eq!(s.stages[0].m, BigUint::from(3u32));
    }

    #[test]
    fn fast_target_has_no_valid_n() {
        let fast = TargetFn::Table {
            values: (0..200u32).map(|n| BigUint::one() << n).collect(),
        };
        assert!(matches!(
            build_osc_schedule(&TargetFn::FloorSqrt, &fast, 1),
            Err(Error::NoValidN { .. })
        ));
    }

    #[test]
    fn empty_schedule_verifies_trivially() {
        let s = build_osc_schedule(&TargetFn::FloorSqrt, &TargetFn::TwoPowFloorSqrt, 0).unwrap();
        assert!(s.stages.is_empty());
        assert!(verify_oscillation(&s).unwrap().is_empty());
    }

    #[test]
    fn lower_bound_from_two_letters() {
        for p in 1..6u64 {
            let d = ForbiddenBlockRules::constant(p + 1, 2).unwrap();
            for s in 1..4 {
                let c = count_nonzero_monomials(&alphabet(&[2, 2]), &d, 2 * p * s).unwrap();
                assert!(c >= BigUint::one() << p);
            }
        }
    }

    proptest! {
        #[test]
        fn dp_matches_brute_force(
            costs in prop::collection::vec(1u64..4, 1..=3),
            d0 in 2u64..5,
            steps in prop::collection::vec(0u64..3, 2),
            budget in 0u64..=14,
        ) {
            let a = alphabet(&costs);
            let mut d = vec![d0];
            for s in steps.iter().take(costs.len() - 1) {
                let last = *d.last().unwrap();
                d.push(last + s);
            }
            let rules = ForbiddenBlockRules::new(d).unwrap();
            let dp = count_nonzero_monomials(&a, &rules, budget).unwrap();
            prop_assert_eq!(dp, BigUint::from(brute(&a, &rules, budget)));
        }

        #[test]
        fn count_is_monotone(costs in prop::collection::vec(1u64..4, 1..=3), d0 in 2u64..5, budget in 0u64..20) {
            let a = alphabet(&costs);
            let rules = ForbiddenBlockRules::constant(d0, costs.len()).unwrap();
            let lo = count_nonzero_monomials(&a, &rules, budget).unwrap();
            let hi = count_nonzero_monomials(&a, &rules, budget + 1).unwrap();
            prop_assert!(lo <= hi);
        }
    }
}
