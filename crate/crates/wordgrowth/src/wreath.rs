//! Growth envelopes for the subalgebra generated by `B` and `c_gamma` inside a
//! matrix wreath product, and an exact check of the product formula for
//! `c_gamma b_1 ... c_gamma b_s` on finite truncations.
//!
//! Maps in `Lin(B', B' (x) A)` are stored by their values on the basis of `B'`;
//! `A` is a free algebra truncated at a degree cap, and any product that would
//! exceed the cap marks the trial as skipped rather than failed.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::{GrowthTab, Label};

/// `lower(n) = w(n/2)`, `upper(n) = g_B(n)^2 w(n) + g_B(n)`.
pub fn compose_growth_bounds(g_b: &GrowthTab, w: &GrowthTab) -> Result<(GrowthTab, GrowthTab)> {
    if g_b.len() != w.len() {
        return Err(Error::invalid(format!(
            "g_B tabulated on {} points, w on {}",
            g_b.len(),
            w.len()
        )));
    }
    if !g_b.is_monotone() || !w.is_monotone() {
        return Err(Error::invalid("growth tables must be non-decreasing"));
    }
    let lower = GrowthTab::tabulate(w.n_max(), Label::Lower, |n| w.values[n / 2].clone());
    let upper = GrowthTab::tabulate(w.n_max(), Label::Upper, |n| {
        let g = &g_b.values[n];
        g * g * &w.values[n] + g
    });
    Ok((lower, upper))
}

/// A monomial in the free algebra: a sequence of letter indices.
pub type Monomial = Vec<u32>;

/// Element of the truncated free algebra.
pub type AElem = BTreeMap<Monomial, i64>;

/// Element of `B' (x) A`, keyed by (basis index of `B'`, monomial).
pub type Tensor = BTreeMap<(usize, Monomial), i64>;

/// A linear map `B' -> B' (x) A`, given by its values on the basis.
pub type LinMap = Vec<Tensor>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedModel {
    /// `mult[i][j][k]`: coefficient of `b_k` in `b_i b_j`; `b_0 = 1`.
    pub mult: Vec<Vec<Vec<i64>>>,
    pub letters: u32,
    /// Largest monomial degree kept in `A`.
    pub cap: usize,
    /// `gamma[i]`: image of `b_i` as (monomial, coefficient) terms.
    pub gamma: Vec<Vec<(Monomial, i64)>>,
}

#[derive(Debug)]
struct Overflow;

fn add_to<K: Ord + Clone>(map: &mut BTreeMap<K, i64>, key: K, c: i64) {
    let e = map.entry(key.clone()).or_insert(0);
    *e += c;
    if *e == 0 {
        map.remove(&key);
    }
}

impl TruncatedModel {
    /// Builds the unital table from the products `b_i b_j` with `i, j >= 1`.
    pub fn from_products(
        products: Vec<Vec<Vec<i64>>>,
        letters: u32,
        cap: usize,
        gamma: Vec<Vec<(Monomial, i64)>>,
    ) -> Result<Self> {
        let r = products.len();
        let dim = r + 1;
        let mut mult = vec![vec![vec![0i64; dim]; dim]; dim];
        for j in 0..dim {
            mult[0][j][j] = 1;
            mult[j][0][j] = 1;
        }
        for (i, row) in products.iter().enumerate() {
            if row.len() != r {
                return Err(Error::InvalidModel(format!(
                    "row {} has {} products, want {r}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                if v.len() != dim {
                    return Err(Error::InvalidModel(format!(
                        "product ({}, {}) has wrong length",
                        i + 1,
                        j + 1
                    )));
                }
                mult[i + 1][j + 1] = v.clone();
            }
        }
        let model = TruncatedModel {
            mult,
            letters,
            cap,
            gamma,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.mult.len()
    }

    /// Shape, unit and associativity checks.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::InvalidModel("empty basis".into()));
        }
        if self
            .mult
            .iter()
            .any(|row| row.len() != dim || row.iter().any(|v| v.len() != dim))
        {
            return Err(Error::InvalidModel("multiplication table is not square".into()));
        }
        if self.gamma.len() != dim {
            return Err(Error::InvalidModel(format!(
                "gamma has {} images, basis has {dim}",
                self.gamma.len()
            )));
        }
        if self
            .gamma
            .iter()
            .flatten()
            .any(|(m, _)| m.iter().any(|&l| l >= self.letters))
        {
            return Err(Error::InvalidModel("gamma uses an unknown letter".into()));
        }
        for j in 0..dim {
            let e: Vec<i64> = (0..dim).map(|k| i64::from(k == j)).collect();
            if self.mult[0][j] != e || self.mult[j][0] != e {
                return Err(Error::InvalidModel("b_0 is not a unit".into()));
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let left = self.mul_vec(&self.mult[i][j], &basis(dim, k));
                    let right = self.mul_vec(&basis(dim, i), &self.mult[j][k]);
                    if left != right {
                        return Err(Error::InvalidModel(format!("(b{i} b{j}) b{k} != b{i} (b{j} b{k})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Product of two elements of `B'` in coordinates.
    pub fn mul_vec(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        let dim = self.dim();
        let mut out = vec![0i64; dim];
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                for k in 0..dim {
                    out[k] += a * b * self.mult[i][j][k];
                }
            }
        }
        out
    }

    fn mul_a(&self, x: &AElem, y: &AElem) -> std::result::Result<AElem, Overflow> {
        let mut out = AElem::new();
        for (m1, c1) in x {
            for (m2, c2) in y {
                if m1.len() + m2.len() > self.cap {
                    return Err(Overflow);
                }
                let mut m = m1.clone();
                m.extend_from_slice(m2);
                add_to(&mut out, m, c1 * c2);
            }
        }
        Ok(out)
    }

    /// `gamma` extended linearly to `B'`.
    pub fn gamma_of(&self, x: &[i64]) -> AElem {
        let mut out = AElem::new();
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (m, c) in &self.gamma[i] {
                add_to(&mut out, m.clone(), a * c);
            }
        }
        out
    }

    /// `c_tau(x) = 1 (x) tau(x)` for a map given by its basis images.
    pub fn c_map(&self, tau: &[AElem]) -> LinMap {
        tau.iter()
            .map(|a| a.iter().map(|(m, &c)| ((0usize, m.clone()), c)).collect())
            .collect()
    }

    /// Value of a map on an arbitrary vector.
    fn apply(&self, f: &LinMap, x: &[i64]) -> Tensor {
        let mut out = Tensor::new();
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (key, &c) in &f[i] {
                add_to(&mut out, key.clone(), a * c);
            }
        }
        out
    }

    /// `(fg)(x) = (1 (x) mu)(f (x) 1) g(x)`.
    fn compose(&self, f: &LinMap, g: &LinMap) -> std::result::Result<LinMap, Overflow> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(dim);
        for gx in g {
            let mut acc = Tensor::new();
            for ((k, a), &c) in gx {
                for ((l, a2), &c2) in &f[*k] {
                    if a2.len() + a.len() > self.cap {
                        return Err(Overflow);
                    }
                    let mut m = a2.clone();
                    m.extend_from_slice(a);
                    add_to(&mut acc, (*l, m), c * c2);
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `(fb)(x) = f(bx)`.
    pub fn right_mul(&self, f: &LinMap, b: &[i64]) -> LinMap {
        (0..self.dim())
            .map(|i| self.apply(f, &self.mul_vec(b, &basis(self.dim(), i))))
            .collect()
    }

    /// `(bf)(x) = (b (x) 1) f(x)`.
    pub fn left_mul(&self, b: &[i64], f: &LinMap) -> LinMap {
        let dim = self.dim();
        f.iter()
            .map(|t| {
                let mut out = Tensor::new();
                for ((k, a), &c) in t {
                    let prod = self.mul_vec(b, &basis(dim, *k));
                    for (l, &e) in prod.iter().enumerate() {
                        if e != 0 {
                            add_to(&mut out, (l, a.clone()), c * e);
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Evaluates `c_gamma b_1 c_gamma b_2 ... c_gamma b_s` at `x` by multiplying in order.
    fn left_side(&self, bs: &[usize], x: usize) -> std::result::Result<Tensor, Overflow> {
        let dim = self.dim();
        let images: Vec<AElem> = (0..dim).map(|i| self.gamma_of(&basis(dim, i))).collect();
        let c = self.c_map(&images);
        let mut acc: Option<LinMap> = None;
        for &b in bs {
            let term = self.right_mul(&c, &basis(dim, b));
            acc = Some(match acc {
                None => term,
                Some(prev) => self.compose(&prev, &term)?,
            });
        }
        Ok(self.apply(&acc.expect("s >= 1"), &basis(dim, x)))
    }

    /// `1 (x) gamma(b_1) ... gamma(b_{s-1}) gamma(b_s x)`.
    fn right_side(&self, bs: &[usize], x: usize) -> std::result::Result<Tensor, Overflow> {
        let dim = self.dim();
        let (last, init) = bs.split_last().expect("s >= 1");
        let mut acc: Option<AElem> = None;
        let push = |acc: &mut Option<AElem>, e: AElem| -> std::result::Result<(), Overflow> {
            *acc = Some(match acc.take() {
                None => e,
                Some(prev) => self.mul_a(&prev, &e)?,
            });
            Ok(())
        };
        for &b in init {
            push(&mut acc, self.gamma_of(&basis(dim, b)))?;
        }
        let bx = self.mul_vec(&basis(dim, *last), &basis(dim, x));
        push(&mut acc, self.gamma_of(&bx))?;
        Ok(acc.unwrap().into_iter().map(|(m, c)| ((0usize, m), c)).collect())
    }

    /// Checks `c_tau c_sigma(x) = 1 (x) tau(1) sigma(x)` on every basis vector.
    pub fn check_two_map_identity(&self, tau: &[AElem], sigma: &[AElem]) -> Option<bool> {
        let dim = self.dim();
        let prod = self.compose(&self.c_map(tau), &self.c_map(sigma)).ok()?;
        for x in 0..dim {
            let rhs: Tensor = self
                .mul_a(&tau[0], &sigma[x])
                .ok()?
                .into_iter()
                .map(|(m, c)| ((0usize, m), c))
                .collect();
            if prod[x] != rhs {
                return Some(false);
            }
        }
        Some(true)
    }
}

fn basis(dim: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0i64; dim];
    v[i] = 1;
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// A product left the degree cap.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub b: Vec<usize>,
    pub x: usize,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub s: usize,
    pub trials: Vec<Trial>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl DecompositionReport {
    fn from_trials(s: usize, trials: Vec<Trial>) -> Self {
        let count = |o| trials.iter().filter(|t| t.outcome == o).count();
        DecompositionReport {
            s,
            passed: count(Outcome::Pass),
            failed: count(Outcome::Fail),
            skipped: count(Outcome::Skipped),
            trials,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

fn run_trial(model: &TruncatedModel, b: Vec<usize>, x: usize) -> Trial {
    let outcome = match (model.left_side(&b, x), model.right_side(&b, x)) {
        (Ok(l), Ok(r)) if l == r => Outcome::Pass,
        (Ok(_), Ok(_)) => Outcome::Fail,
        _ => Outcome::Skipped,
    };
    Trial { b, x, outcome }
}

/// Random trials of the product formula.
pub fn verify_decomposition(model: &TruncatedModel, s: usize, trials: usize, seed: u64) -> Result<DecompositionReport> {
    if s == 0 {
        return Err(Error::invalid("s must be at least 1"));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = model.dim();
    let out = (0..trials)
        .map(|_| {
            let b: Vec<usize> = (0..s).map(|_| rng.gen_range(0..dim)).collect();
            let x = rng.gen_range(0..dim);
            run_trial(model, b, x)
        })
        .collect();
    Ok(DecompositionReport::from_trials(s, out))
}

/// Every choice of `b_1..b_s, x` from the basis.
pub fn verify_decomposition_exhaustive(model: &TruncatedModel, s: usize) -> Result<DecompositionReport> {
    if s == 0 {
        return Err(Error::invalid("s must be at least 1"));
    }
    model.validate()?;
    let dim = model.dim();
    let total = dim.pow(s as u32 + 1);
    let out = (0..total)
        .map(|mut code| {
            let mut digits = Vec::with_capacity(s + 1);
            for _ in 0..=s {
                digits.push(code % dim);
                code /= dim;
            }
            let x = digits.pop().unwrap();
            run_trial(model, digits, x)
        })
        .collect();
    Ok(DecompositionReport::from_trials(s, out))
}

/// Random unital model: products of non-unit basis elements with coefficients
/// in {-1, 0, 1} on the non-unit part, rejection-sampled for associativity;
/// `gamma` sends each basis element to a short signed sum of letters.
pub fn random_model(r: usize, letters: u32, cap: usize, seed: u64) -> Result<TruncatedModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = r + 1;
    for _ in 0..100_000 {
        let products: Vec<Vec<Vec<i64>>> = (0..r)
            .map(|_| {
                (0..r)
                    .map(|_| {
                        let mut v = vec![0i64; dim];
                        for c in v.iter_mut().skip(1) {
                            *c = rng.gen_range(-1..=1);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let gamma: Vec<Vec<(Monomial, i64)>> = (0..dim)
            .map(|_| {
                let terms = rng.gen_range(0..=2);
                let mut e = AElem::new();
                for _ in 0..terms {
                    let m = vec![rng.gen_range(0..letters)];
                    add_to(&mut e, m, if rng.gen_bool(0.5) { 1 } else { -1 });
                }
                e.into_iter().collect()
            })
            .collect();
        if let Ok(m) = TruncatedModel::from_products(products, letters, cap, gamma) {
            return Ok(m);
        }
    }
    Err(Error::InvalidModel("no associative table found".into()))
}

/// Random images for the two-map identity.
pub fn random_images(dim: usize, letters: u32, seed: u64) -> Vec<AElem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| {
            let mut e = AElem::new();
            for _ in 0..rng.gen_range(0..=2) {
                let len = rng.gen_range(1..=2);
                let m: Monomial = (0..len).map(|_| rng.gen_range(0..letters)).collect();
                add_to(&mut e, m, rng.gen_range(-2..=2));
            }
            e
        })
        .collect()
}

/// Growth table from `(n, value)` rows with `n = 0, 1, 2, ...`.
pub fn growth_from_rows(rows: &[(usize, BigUint)], label: Label) -> Result<GrowthTab> {
    for (i, (n, _)) in rows.iter().enumerate() {
        if *n != i {
            return Err(Error::invalid(format!(
                "row {i} has n = {n}; expected consecutive n from 0"
            )));
        }
    }
    Ok(GrowthTab::new(rows.iter().map(|(_, v)| v.clone()).collect(), label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nil_model() -> TruncatedModel {
        // span{1, b}, b^2 = 0, gamma(1) = gamma(b) = x.
        TruncatedModel::from_products(
            vec![vec![vec![0, 0]]],
            1,
            3,
            vec![vec![(vec![0], 1)], vec![(vec![0], 1)]],
        )
        .unwrap()
    }

    #[test]
    fn bounds_example() {
        let g = GrowthTab::from_u64s((0..5).map(|n| n + 1), Label::Exact);
        let w = GrowthTab::from_u64s(0..5, Label::Exact);
        let (lo, up) = compose_growth_bounds(&g, &w).unwrap();
        assert_eq!(up.values[2], BigUint::from(21u32));
        assert_eq!(lo.values[2], BigUint::from(1u32));
        assert_eq!(lo.label, Label::Lower);
        assert_eq!(up.label, Label::Upper);
    }

    #[test]
    fn bounds_zero_map() {
        let g = GrowthTab::from_u64s((0..6).map(|n| 2 * n + 1), Label::Exact);
        let w = GrowthTab::from_u64s([0; 6], Label::Exact);
        let (lo, up) = compose_growth_bounds(&g, &w).unwrap();
        assert!(lo.values.iter().all(|v| *v == BigUint::from(0u32)));
        assert_eq!(up.values, g.values);
    }

    #[test]
    fn bounds_mismatch() {
        let g = GrowthTab::from_u64s([1, 2, 3], Label::Exact);
        let w = GrowthTab::from_u64s([0, 1], Label::Exact);
        assert!(matches!(compose_growth_bounds(&g, &w), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn s_one_all_pairs() {
        let r = verify_decomposition_exhaustive(&nil_model(), 1).unwrap();
        assert_eq!(r.trials.len(), 4);
        assert_eq!(r.passed, 4);
    }

    #[test]
    fn s_two_nil_model() {
        let m = nil_model();
        let r = verify_decomposition_exhaustive(&m, 2).unwrap();
        assert_eq!(r.passed, 8);
        // b_1 = b_2 = b, x = 1: both sides equal 1 (x) xx.
        let lhs = m.left_side(&[1, 1], 0).unwrap();
        let want: Tensor = [((0usize, vec![0, 0]), 1)].into_iter().collect();
        assert_eq!(lhs, want);
        // b_2 x = b^2 = 0 kills the right side.
        assert!(m.left_side(&[1, 1], 1).unwrap().is_empty());
    }

    #[test]
    fn overflow_is_skipped() {
        let mut m = nil_model();
        m.cap = 1;
        let r = verify_decomposition_exhaustive(&m, 2).unwrap();
        assert_eq!(r.failed, 0);
        assert!(r.skipped > 0);
    }

    #[test]
    fn non_associative_rejected() {
        // b1 b1 = b2, b2 b1 = b1, all else zero: (b1 b1) b1 = b1 but b1 (b1 b1) = 0.
        let products = vec![vec![vec![0, 0, 1], vec![0, 0, 0]], vec![vec![0, 1, 0], vec![0, 0, 0]]];
        let gamma = vec![vec![], vec![], vec![]];
        let err = TruncatedModel::from_products(products, 1, 3, gamma).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn wrong_formula_is_caught() {
        // A model where gamma(b x) differs from gamma(b) gamma(x) makes the naive
        // "gamma(b_s) gamma(x)" reading fail, so the check is not vacuous.
        let m = nil_model();
        let lhs = m.left_side(&[0, 1], 1).unwrap();
        let naive: Tensor = [((0usize, vec![0, 0, 0]), 1)].into_iter().collect();
        assert_ne!(lhs, naive);
    }

    #[test]
    fn exhaustive_small_models() {
        for seed in 0..12 {
            let r = 1 + (seed as usize % 2);
            let m = random_model(r, 2, 4, seed).unwrap();
            for s in 1..=3 {
                let rep = verify_decomposition_exhaustive(&m, s).unwrap();
                assert!(rep.all_pass(), "seed {seed} s {s}");
            }
        }
    }

    #[test]
    fn random_trials_reproducible() {
        let m = random_model(2, 2, 4, 7).unwrap();
        let a = verify_decomposition(&m, 3, 50, 11).unwrap();
        let b = verify_decomposition(&m, 3, 50, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.all_pass());
    }

    #[test]
    fn left_action_is_associative() {
        let m = random_model(2, 2, 4, 3).unwrap();
        let images = random_images(3, 2, 5);
        let c = m.c_map(&images);
        for i in 0..3 {
            for j in 0..3 {
                let b1 = basis(3, i);
                let b2 = basis(3, j);
                let lhs = m.left_mul(&m.mul_vec(&b1, &b2), &c);
                let rhs = m.left_mul(&b1, &m.left_mul(&b2, &c));
                assert_eq!(lhs, rhs);
            }
        }
    }

    proptest! {
        #[test]
        fn two_map_identity(seed in 0u64..500) {
            let m = random_model(2, 2, 4, seed).unwrap();
            let tau = random_images(3, 2, seed.wrapping_mul(31) + 1);
            let sigma = random_images(3, 2, seed.wrapping_mul(17) + 2);
            prop_assert_eq!(m.check_two_map_identity(&tau, &sigma), Some(true));
        }

        #[test]
        fn bounds_sandwich(
            g in prop::collection::vec(1u64..50, 1..30),
            w in prop::collection::vec(0u64..50, 1..30),
        ) {
            let n = g.len().min(w.len());
            let mut gs = g[..n].to_vec();
            gs.sort();
            let mut ws = w[..n].to_vec();
            ws.sort();
            let (lo, up) = compose_growth_bounds(
                &GrowthTab::from_u64s(gs, Label::Exact),
                &GrowthTab::from_u64s(ws, Label::Exact),
            ).unwrap();
            prop_assert!(lo.values.iter().zip(&up.values).all(|(a, b)| a <= b));
            prop_assert!(lo.is_monotone() && up.is_monotone());
        }
    }
}
