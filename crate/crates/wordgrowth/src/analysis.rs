//! Growth analytics shared by the experiments: cumulative growth from factor
//! complexity, GK-dimension estimates, oscillation reports and the pipelines
//! composing map growth with a base growth profile.

use std::ops::Range;

use num_bigint::BigUint;
use num_integer::Roots;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::error::{Error, Result};
use crate::growth::{ln_big, GrowthTab, Label};
use crate::oscillator::{build_osc_schedule, count_at, verify_oscillation, StageCheck, TargetFn};
use crate::sbm::{
    build_sb_sets, generate_t_prefix, level_schedule_covering, w_gamma_leveled_table, GrowthTarget, RealizationCheck,
};
use crate::toeplitz::SampledProfile;
use crate::words::ComplexityProfile;
use crate::wreath::compose_growth_bounds;

/// `g(n) = p(0) + ... + p(n)` up to the certified horizon.
pub fn growth_from_complexity(p: &ComplexityProfile) -> GrowthTab {
    let n_max = p.horizon.min(p.n_max());
    let mut acc = 0u64;
    let values = (0..=n_max)
        .map(|n| {
            acc += p.p(n);
            BigUint::from(acc)
        })
        .collect();
    GrowthTab::new(values, Label::Exact)
}

/// Secant slopes of `ln g` against `ln n`, summarized over the tail half.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GKEstimate {
    /// `(n, slope)` with the slope taken from the partner point to `n`.
    #[serde_as(as = "Vec<(DisplayFromStr, _)>")]
    pub point_estimates: Vec<(BigUint, f64)>,
    /// Largest slope over the tail half.
    pub limsup_est: f64,
    /// Smallest slope over the tail half.
    pub liminf_est: f64,
    /// Largest `ln g(n) / ln n` over the tail half, for reference.
    pub naive_limsup: f64,
    /// Table indices covered by the tail half.
    pub window: (usize, usize),
}

/// Shortest table `gk_estimate` accepts.
pub const GK_MIN_LEN: usize = 16;

fn secant(n_hi: &BigUint, g_hi: &BigUint, n_lo: &BigUint, g_lo: &BigUint) -> Option<f64> {
    if g_hi.is_zero() || g_lo.is_zero() || n_lo.is_zero() || n_lo >= n_hi {
        return None;
    }
    Some((ln_big(g_hi) - ln_big(g_lo)) / (ln_big(n_hi) - ln_big(n_lo)))
}

/// Summary of `(table index, n, g(n), slope)` samples, in increasing `n`.
fn summarize(samples: Vec<(usize, BigUint, BigUint, f64)>) -> Result<GKEstimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    let tail = &samples[samples.len() / 2..];
    let limsup_est = tail.iter().map(|s| s.3).fold(f64::NEG_INFINITY, f64::max);
    let liminf_est = tail.iter().map(|s| s.3).fold(f64::INFINITY, f64::min);
    let naive_limsup = tail
        .iter()
        .filter(|s| s.1 > BigUint::one())
        .map(|s| ln_big(&s.2) / ln_big(&s.1))
        .fold(f64::NEG_INFINITY, f64::max);
    let window = (tail[0].0, tail[tail.len() - 1].0 + 1);
    Ok(GKEstimate {
        point_estimates: samples.into_iter().map(|s| (s.1, s.3)).collect(),
        limsup_est,
        liminf_est,
        naive_limsup,
        window,
    })
}

/// Estimate from a dense table, pairing each `n >= 2` with `floor(n / 2)`.
pub fn gk_estimate(g: &GrowthTab) -> Result<GKEstimate> {
    g.require_len(GK_MIN_LEN)?;
    let samples = (2..g.len())
        .filter_map(|n| {
            let (hi, lo) = (BigUint::from(n), BigUint::from(n / 2));
            secant(&hi, &g.values[n], &lo, &g.values[n / 2]).map(|s| (n, hi, g.values[n].clone(), s))
        })
        .collect();
    summarize(samples)
}

/// Estimate from sampled values, pairing consecutive samples inside `window`.
pub fn gk_estimate_sampled(profile: &SampledProfile, window: Range<usize>) -> Result<GKEstimate> {
    let end = window.end.min(profile.points.len());
    if end < window.start + 2 {
        return Err(Error::InsufficientData {
            have: end.saturating_sub(window.start),
            need: 2,
        });
    }
    let samples = (window.start + 1..end)
        .filter_map(|i| {
            let (p, v) = (&profile.points, &profile.values);
            secant(&p[i], &v[i], &p[i - 1], &v[i - 1]).map(|s| (i, p[i].clone(), v[i].clone(), s))
        })
        .collect();
    summarize(samples)
}

/// Allowance for non-multiplicative rescaling effects in [`scaling_invariance_check`].
pub const SCALING_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub c: u64,
    pub d: u64,
    pub original: f64,
    pub scaled: f64,
    pub difference: f64,
    /// `2 ln c / ln n_tail + SCALING_SLACK`, with `n_tail` the least tail point.
    pub allowed: f64,
    pub holds: bool,
}

fn scaling_report(c: u64, d: u64, original: &GKEstimate, scaled: &GKEstimate) -> ScalingReport {
    let n_tail = original
        .point_estimates
        .get(original.point_estimates.len() / 2)
        .map_or(f64::INFINITY, |p| ln_big(&p.0));
    let allowed = 2.0 * (c as f64).ln() / n_tail + SCALING_SLACK;
    let difference = (original.limsup_est - scaled.limsup_est).abs();
    ScalingReport {
        c,
        d,
        original: original.limsup_est,
        scaled: scaled.limsup_est,
        difference,
        allowed,
        holds: difference <= allowed,
    }
}

/// Compares the estimates of `g` and `n -> c g(d n)` on `n <= n_max / d`.
pub fn scaling_invariance_check(g: &GrowthTab, c: u64, d: u64) -> Result<ScalingReport> {
    if c == 0 || d == 0 {
        return Err(Error::invalid("scaling constants must be positive"));
    }
    let range = g.n_max() / d as usize;
    let original = gk_estimate(&g.truncate(range))?;
    let scaled_tab = GrowthTab::tabulate(range, g.label, |n| c * &g.values[n * d as usize]);
    let scaled = gk_estimate(&scaled_tab)?;
    Ok(scaling_report(c, d, &original, &scaled))
}

/// Value at the least sample point `>= x`, an upper bound for a non-decreasing function.
fn step_upper(profile: &SampledProfile, x: &BigUint) -> Option<BigUint> {
    let i = profile.points.partition_point(|p| p < x);
    profile.values.get(i).cloned()
}

/// Sampled counterpart of [`scaling_invariance_check`], reading `g(d r)` from
/// the next sample at or above `d r`.
pub fn scaling_invariance_check_sampled(
    profile: &SampledProfile,
    window: Range<usize>,
    c: u64,
    d: u64,
) -> Result<ScalingReport> {
    if c == 0 || d == 0 {
        return Err(Error::invalid("scaling constants must be positive"));
    }
    let scaled_values: Vec<BigUint> = profile
        .points
        .iter()
        .map_while(|p| step_upper(profile, &(p * d)).map(|v| c * v))
        .collect();
    let end = window.end.min(scaled_values.len());
    let scaled_profile = SampledProfile {
        points: profile.points[..scaled_values.len()].to_vec(),
        values: scaled_values,
    };
    let original = gk_estimate_sampled(profile, window.start..end)?;
    let scaled = gk_estimate_sampled(&scaled_profile, window.start..end)?;
    Ok(scaling_report(c, d, &original, &scaled))
}

/// Points where a growth function sits below a slow bound or above a fast one.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillationReport {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub points: Vec<BigUint>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub slow_hits: Vec<BigUint>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub fast_hits: Vec<BigUint>,
    /// Largest share of slow hits among the first `j` points, over all `j`.
    #[serde_as(as = "DisplayFromStr")]
    pub upper_density_slow: Ratio<u64>,
    #[serde_as(as = "DisplayFromStr")]
    pub upper_density_fast: Ratio<u64>,
}

fn upper_density(hits: &[bool]) -> Ratio<u64> {
    let mut best = Ratio::from_integer(0);
    let mut count = 0u64;
    for (j, &h) in hits.iter().enumerate() {
        count += u64::from(h);
        best = best.max(Ratio::new(count, j as u64 + 1));
    }
    best
}

impl OscillationReport {
    /// Builds the report from per-point hit flags, points in increasing order.
    pub fn from_hits(points: Vec<BigUint>, slow: &[bool], fast: &[bool]) -> Self {
        let pick = |mask: &[bool]| points.iter().zip(mask).filter(|p| *p.1).map(|p| p.0.clone()).collect();
        OscillationReport {
            slow_hits: pick(slow),
            fast_hits: pick(fast),
            upper_density_slow: upper_density(slow),
            upper_density_fast: upper_density(fast),
            points,
        }
    }
}

/// Hits of `g <= bound_slow` and `g >= bound_fast` over `n = 1..` on the common range.
pub fn oscillation_report(g: &GrowthTab, bound_slow: &GrowthTab, bound_fast: &GrowthTab) -> OscillationReport {
    let len = g.len().min(bound_slow.len()).min(bound_fast.len());
    let range = 1..len;
    let slow: Vec<bool> = range.clone().map(|n| g.values[n] <= bound_slow.values[n]).collect();
    let fast: Vec<bool> = range.clone().map(|n| g.values[n] >= bound_fast.values[n]).collect();
    OscillationReport::from_hits(range.map(BigUint::from).collect(), &slow, &fast)
}

/// Which theorem shape a pipeline run follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    A1,
    A2,
    B1,
    B2,
}

impl Mode {
    fn realizing(self) -> bool {
        matches!(self, Mode::A1 | Mode::A2)
    }

    fn needs_omega(self) -> bool {
        matches!(self, Mode::A2 | Mode::B2)
    }
}

/// Stand-in growth of the base nil algebra; reports label it `assumed`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseGrowth {
    /// `(n + 1)^degree`.
    Polynomial { degree: u32 },
    /// `floor(omega(n)^(1/3))`.
    OmegaCubeRoot,
    Table {
        #[serde_as(as = "Vec<DisplayFromStr>")]
        values: Vec<BigUint>,
    },
}

impl BaseGrowth {
    fn eval(&self, n: &BigUint, omega: Option<&TargetFn>) -> Option<BigUint> {
        match self {
            BaseGrowth::Polynomial { degree } => Some(num_traits::pow(n + 1u32, *degree as usize)),
            BaseGrowth::OmegaCubeRoot => omega?.eval(n).map(|w| w.cbrt()),
            BaseGrowth::Table { values } => values.get(usize::try_from(n).ok()?).cloned(),
        }
    }
}

/// The slow function handed to the level schedule, tabulated from `delta(0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeltaSpec {
    /// `ceil(sqrt(n))`.
    CeilSqrt,
    /// `values[n] = delta(n)`; `values[0]` is ignored.
    Table { values: Vec<u64> },
}

impl DeltaSpec {
    fn table(&self, len: usize) -> Vec<u64> {
        match self {
            DeltaSpec::CeilSqrt => (0..len as u64)
                .map(|n| {
                    let r = n.sqrt();
                    if r * r == n {
                        r
                    } else {
                        r + 1
                    }
                })
                .collect(),
            DeltaSpec::Table { values } => values.clone(),
        }
    }
}

fn default_n_max() -> usize {
    512
}

fn default_prefix_len() -> usize {
    1 << 15
}

fn default_stages() -> usize {
    2
}

fn default_epsilon() -> Ratio<u64> {
    Ratio::new(1, 2)
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub base: BaseGrowth,
    /// `f(2^k)` for `k = 0, 1, ...`; realizing modes.
    #[serde_as(as = "Option<Vec<DisplayFromStr>>")]
    #[serde(default)]
    pub f_at_pow2: Option<Vec<BigUint>>,
    #[serde(default)]
    pub delta: Option<DeltaSpec>,
    /// Largest `n` tabulated in realizing modes.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Length of the leveled word prefix counted in realizing modes.
    #[serde(default = "default_prefix_len")]
    pub prefix_len: usize,
    /// Slow and fast targets of the oscillating modes.
    #[serde(default)]
    pub f1: Option<TargetFn>,
    #[serde(default)]
    pub f2: Option<TargetFn>,
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Super-polynomial cap of the `A2` and `B2` modes.
    #[serde(default)]
    pub omega: Option<TargetFn>,
    /// Slack on polynomial exponents.
    #[serde_as(as = "DisplayFromStr")]
    #[serde(default = "default_epsilon")]
    pub epsilon: Ratio<u64>,
}

impl PipelineConfig {
    /// A config with every optional field at its default.
    pub fn new(mode: Mode, base: BaseGrowth) -> Self {
        PipelineConfig {
            mode,
            base,
            f_at_pow2: None,
            delta: None,
            n_max: default_n_max(),
            prefix_len: default_prefix_len(),
            f1: None,
            f2: None,
            stages: default_stages(),
            omega: None,
            epsilon: default_epsilon(),
        }
    }
}

/// Bounds on the composed growth at one point.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineRow {
    #[serde_as(as = "DisplayFromStr")]
    pub n: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub g_b: BigUint,
    #[serde_as(as = "DisplayFromStr")]
    pub w: BigUint,
    /// `false` when `w` is only a lower bound read off a finite prefix.
    pub w_certified: bool,
    /// `w(floor(n / 2))`.
    #[serde_as(as = "DisplayFromStr")]
    pub lower: BigUint,
    /// `g_B(n)^2 w(n) + g_B(n)`.
    #[serde_as(as = "DisplayFromStr")]
    pub upper: BigUint,
    pub sandwich_ok: bool,
    /// Upper bound against the realizing cap.
    pub cap_ok: Option<bool>,
    /// Upper bound against the slow bound.
    pub slow_hit: Option<bool>,
    /// Lower bound against the fast bound.
    pub fast_hit: Option<bool>,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub mode: Mode,
    pub base_label: Label,
    pub rows: Vec<PipelineRow>,
    /// `lower <= upper` at every row.
    pub sandwich_ok: bool,
    /// `f(floor(N / delta(N))) <= w(2N) = lower(4N)`; realizing modes.
    pub realization: Vec<RealizationCheck>,
    /// Cap check at the largest tabulated `n`; realizing modes.
    pub cap_ok_at_largest: Option<bool>,
    pub stage_checks: Vec<StageCheck>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub scheduled_n: Vec<BigUint>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub scheduled_m: Vec<BigUint>,
    /// Scheduled points left out because a bound could not be materialized.
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub skipped_points: Vec<BigUint>,
    pub oscillation: Option<OscillationReport>,
    pub slow_hits_at_all_m: Option<bool>,
    pub fast_hits_at_all_n: Option<bool>,
    pub passed: bool,
}

impl PipelineReport {
    /// The inequalities that hold at every finite `n`: the sandwich, the
    /// realization chain and the stage checks. Caps and hit counts are
    /// asymptotic statements and only reported.
    pub fn asserted_ok(&self) -> bool {
        self.sandwich_ok
            && self.realization.iter().all(|r| r.holds)
            && self.stage_checks.iter().all(|c| c.fast_ok && c.slow_ok)
    }
}

/// `lower = w(floor(n/2))`, `upper = g_B(n)^2 w(n) + g_B(n)`.
pub fn compose_at(g_b: &BigUint, w: &BigUint, w_half: &BigUint) -> (BigUint, BigUint) {
    (w_half.clone(), g_b * g_b * w + g_b)
}

/// `x^den <= y^num` with `y^(num/den)` the bound; exact.
fn le_rational_power(x: &BigUint, y: &BigUint, exp: Ratio<u64>) -> bool {
    num_traits::pow(x.clone(), *exp.denom() as usize) <= num_traits::pow(y.clone(), *exp.numer() as usize)
}

fn ceil_log2(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

pub fn theorem_ab_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    if config.mode.needs_omega() && config.omega.is_none() {
        return Err(Error::invalid(format!("mode {:?} needs omega", config.mode)));
    }
    if matches!(config.base, BaseGrowth::OmegaCubeRoot) && config.omega.is_none() {
        return Err(Error::invalid("base omega-cube-root needs omega"));
    }
    if config.mode.realizing() {
        realizing_pipeline(config)
    } else {
        oscillating_pipeline(config)
    }
}

fn realizing_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    let stage = |e: Error, s: &str| e.in_stage(s);
    let n_max = config.n_max;
    if n_max < 4 {
        return Err(Error::invalid("n_max must be at least 4"));
    }
    let f_values = config
        .f_at_pow2
        .clone()
        .ok_or_else(|| Error::invalid("realizing modes need f_at_pow2"))?;
    let f = GrowthTarget::new(f_values).map_err(|e| stage(e, "target"))?;
    let need_exp = ceil_log2(4 * n_max).max(ceil_log2(config.prefix_len));
    if f.max_exp() < need_exp {
        return Err(stage(
            Error::InsufficientData {
                have: f.max_exp() + 1,
                need: need_exp + 1,
            },
            "target",
        ));
    }
    let delta_spec = config
        .delta
        .clone()
        .ok_or_else(|| Error::invalid("realizing modes need delta"))?;
    let delta = delta_spec.table(n_max.max(4096) + 1);
    if delta.len() <= n_max / 4 {
        return Err(stage(
            Error::InsufficientData {
                have: delta.len(),
                need: n_max / 4 + 1,
            },
            "level schedule",
        ));
    }
    let schedule = level_schedule_covering(&delta, config.prefix_len).map_err(|e| stage(e, "level schedule"))?;
    let sets = build_sb_sets(&f, ceil_log2(config.prefix_len), false).map_err(|e| stage(e, "sbm sets"))?;
    let prefix = generate_t_prefix(&sets, &schedule, config.prefix_len).map_err(|e| stage(e, "t word"))?;
    let counts = w_gamma_leveled_table(&prefix, n_max).map_err(|e| stage(e, "map growth"))?;
    let certified = counts.iter().all(|c| c.certified);
    let w = GrowthTab::from_u64s(
        counts.iter().map(|c| c.value),
        if certified { Label::Exact } else { Label::Lower },
    );
    let omega = config.omega.as_ref();
    let g_b_values = (0..=n_max)
        .map(|n| {
            config
                .base
                .eval(&BigUint::from(n), omega)
                .ok_or_else(|| Error::TableExhausted {
                    stage: 0,
                    detail: format!("base growth not evaluable at {n}"),
                })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| stage(e, "base growth"))?;
    let g_b = GrowthTab::new(g_b_values, Label::Assumed);
    let (lower, upper) = compose_growth_bounds(&g_b, &w).map_err(|e| stage(e, "wreath bounds"))?;

    let eps = config.epsilon;
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let nb = BigUint::from(n);
        let f_4n = f.eval(4 * n.max(1) as u64).unwrap();
        let cap_ok = match config.mode {
            // upper(n) <= (n+1)^(11+eps) f(4n)
            Mode::A1 => {
                let exp = eps + Ratio::from_integer(11);
                let lhs = num_traits::pow(upper.values[n].clone(), *exp.denom() as usize);
                let rhs = num_traits::pow(&nb + 1u32, *exp.numer() as usize)
                    * num_traits::pow(f_4n.clone(), *exp.denom() as usize);
                lhs <= rhs
            }
            // upper(n) <= c^2 (n+1)^5 f(4n) + c with c = ceil(omega(n)^(1/3))
            _ => match omega.and_then(|o| o.eval(&nb)) {
                Some(om) => {
                    let mut c = om.cbrt();
                    if &c * &c * &c < om {
                        c += 1u32;
                    }
                    upper.values[n] <= &c * &c * num_traits::pow(&nb + 1u32, 5) * &f_4n + &c
                }
                None => false,
            },
        };
        rows.push(PipelineRow {
            sandwich_ok: lower.values[n] <= upper.values[n],
            n: nb,
            g_b: g_b.values[n].clone(),
            w: w.values[n].clone(),
            w_certified: counts[n].certified,
            lower: lower.values[n].clone(),
            upper: upper.values[n].clone(),
            cap_ok: Some(cap_ok),
            slow_hit: None,
            fast_hit: None,
        });
    }
    let realization: Vec<RealizationCheck> = (1..=n_max / 4)
        .map(|big_n| {
            let d = delta[big_n].max(1);
            let f_lhs = f.eval((big_n as u64 / d).max(1)).unwrap();
            let w_2n = counts[2 * big_n];
            RealizationCheck {
                big_n: big_n as u64,
                holds: f_lhs <= lower.values[4 * big_n],
                f_lhs,
                w_2n,
            }
        })
        .collect();
    let sandwich_ok = rows.iter().all(|r| r.sandwich_ok);
    let cap_ok_at_largest = rows.last().and_then(|r| r.cap_ok);
    let passed = sandwich_ok && realization.iter().all(|r| r.holds) && cap_ok_at_largest == Some(true);
    Ok(PipelineReport {
        mode: config.mode,
        base_label: Label::Assumed,
        rows,
        sandwich_ok,
        realization,
        cap_ok_at_largest,
        stage_checks: Vec::new(),
        scheduled_n: Vec::new(),
        scheduled_m: Vec::new(),
        skipped_points: Vec::new(),
        oscillation: None,
        slow_hits_at_all_m: None,
        fast_hits_at_all_n: None,
        passed,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PointKind {
    /// `2 n_i`, where `g_C(2 n_i) >= w(n_i) >= f2(n_i)`.
    Fast,
    /// `m_i`, on the plateau of `w`.
    Slow,
}

fn oscillating_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    let f1 = config
        .f1
        .as_ref()
        .ok_or_else(|| Error::invalid("oscillating modes need f1"))?;
    let f2 = config
        .f2
        .as_ref()
        .ok_or_else(|| Error::invalid("oscillating modes need f2"))?;
    let schedule = build_osc_schedule(f1, f2, config.stages).map_err(|e| e.in_stage("oscillator"))?;
    let stage_checks = verify_oscillation(&schedule).map_err(|e| e.in_stage("oscillator"))?;
    let mut points: Vec<(BigUint, PointKind)> = schedule
        .stages
        .iter()
        .flat_map(|st| [(&st.n * 2u32, PointKind::Fast), (st.m.clone(), PointKind::Slow)])
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0));
    let omega = config.omega.as_ref();
    let slow_exp = config.epsilon + Ratio::from_integer(6);
    let count = |n: &BigUint| count_at(&schedule.alphabet, &schedule.rules, n).map_err(|e| e.in_stage("map growth"));

    let mut rows = Vec::new();
    let mut skipped_points = Vec::new();
    let mut kinds = Vec::new();
    for (n, kind) in points {
        let Some(g_b) = config.base.eval(&n, omega) else {
            skipped_points.push(n);
            continue;
        };
        let w = count(&n)?;
        let w_half = count(&(&n / 2u32))?;
        let (lower, upper) = compose_at(&g_b, &w, &w_half);
        let (slow_hit, fast_hit) = match kind {
            PointKind::Slow => {
                let hit = match config.mode {
                    Mode::B1 => Some(le_rational_power(&upper, &n, slow_exp)),
                    _ => omega.and_then(|o| o.eval(&n)).map(|om| upper <= om),
                };
                if hit.is_none() {
                    skipped_points.push(n);
                    continue;
                }
                (hit, None)
            }
            PointKind::Fast => match f2.eval(&(&n / 2u32)) {
                Some(bound) => (None, Some(lower >= bound)),
                None => {
                    skipped_points.push(n);
                    continue;
                }
            },
        };
        kinds.push(kind);
        rows.push(PipelineRow {
            sandwich_ok: lower <= upper,
            n,
            g_b,
            w,
            w_certified: true,
            lower,
            upper,
            cap_ok: None,
            slow_hit,
            fast_hit,
        });
    }
    let slow_mask: Vec<bool> = rows.iter().map(|r| r.slow_hit == Some(true)).collect();
    let fast_mask: Vec<bool> = rows.iter().map(|r| r.fast_hit == Some(true)).collect();
    let oscillation = OscillationReport::from_hits(rows.iter().map(|r| r.n.clone()).collect(), &slow_mask, &fast_mask);
    let all_kind = |k: PointKind, mask: &[bool]| {
        let mut any = false;
        let all = kinds.iter().zip(mask).filter(|p| *p.0 == k).all(|p| {
            any = true;
            *p.1
        });
        any && all
    };
    let slow_all = all_kind(PointKind::Slow, &slow_mask)
        && !skipped_points.iter().any(|p| schedule.stages.iter().any(|s| &s.m == p));
    let fast_all = all_kind(PointKind::Fast, &fast_mask)
        && !skipped_points
            .iter()
            .any(|p| schedule.stages.iter().any(|s| &(&s.n * 2u32) == p));
    let sandwich_ok = rows.iter().all(|r| r.sandwich_ok);
    let stages_ok = stage_checks.iter().all(|c| c.fast_ok && c.slow_ok);
    Ok(PipelineReport {
        mode: config.mode,
        base_label: Label::Assumed,
        rows,
        sandwich_ok,
        realization: Vec::new(),
        cap_ok_at_largest: None,
        stage_checks,
        scheduled_n: schedule.stages.iter().map(|s| s.n.clone()).collect(),
        scheduled_m: schedule.stages.iter().map(|s| s.m.clone()).collect(),
        skipped_points,
        oscillation: Some(oscillation),
        slow_hits_at_all_m: Some(slow_all),
        fast_hits_at_all_n: Some(fast_all),
        passed: sandwich_ok && stages_ok && slow_all && fast_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toeplitz::{sample_index, theorem_d_profiles, ToeplitzParams};
    use crate::words::{complexity_profile, Periodic, ThueMorse};
    use proptest::prelude::*;

    fn square_tab(n_max: usize) -> GrowthTab {
        GrowthTab::tabulate(n_max, Label::Exact, |n| BigUint::from((n + 1) * (n + 1)))
    }

    fn doubling(k: usize) -> Vec<BigUint> {
        (0..=k).map(|i| BigUint::one() << (i + 1)).collect()
    }

    #[test]
    fn constant_word_growth_is_linear() {
        let p = complexity_profile(&Periodic::new(vec![0]), 20, 64).unwrap();
        let g = growth_from_complexity(&p);
        assert_eq!(g.values, (0..=20u32).map(|n| BigUint::from(n + 1)).collect::<Vec<_>>());
    }

    #[test]
    fn thue_morse_head() {
        let p = complexity_profile(&ThueMorse, 4, 256).unwrap();
        assert_eq!(p.values, vec![2, 4, 6, 10]);
        let g = growth_from_complexity(&p);
        assert_eq!(g.values, [1u32, 3, 7, 13, 23].map(BigUint::from).to_vec());
        assert!(g.is_strictly_increasing());
        assert!(g.is_submultiplicative());
    }

    #[test]
    fn gk_of_square() {
        let e = gk_estimate(&square_tab(4096)).unwrap();
        assert!((1.95..=2.05).contains(&e.limsup_est), "{}", e.limsup_est);
        assert!(e.liminf_est <= e.limsup_est);
        assert_eq!(e.window.1, 4097);
    }

    #[test]
    fn gk_of_n_log_n() {
        let g = GrowthTab::tabulate(4096, Label::Exact, |n| {
            BigUint::from(n * (usize::BITS - (n + 1).leading_zeros() - u32::from((n + 1).is_power_of_two())) as usize)
        });
        assert_eq!(g.values[7], BigUint::from(7u32 * 3));
        assert_eq!(g.values[8], BigUint::from(8u32 * 4));
        let e = gk_estimate(&g).unwrap();
        assert!((e.limsup_est - 1.0).abs() <= 0.15, "{}", e.limsup_est);
    }

    #[test]
    fn gk_needs_sixteen_points() {
        assert_eq!(
            gk_estimate(&square_tab(14)),
            Err(Error::InsufficientData { have: 15, need: 16 })
        );
    }

    #[test]
    fn gk_of_toeplitz_alpha_regime() {
        let p = ToeplitzParams::from_ints(3, 3, 2, 4, 2).unwrap();
        let d = theorem_d_profiles(&p, 5, 100).unwrap();
        let e = gk_estimate_sampled(&d.g_x_hi, sample_index(33)..sample_index(83)).unwrap();
        assert!((2.7..=3.3).contains(&e.limsup_est), "{}", e.limsup_est);
        let r = scaling_invariance_check_sampled(&d.g_x_hi, sample_index(33)..sample_index(83), 2, 2).unwrap();
        assert!(r.difference <= 0.15, "{r:?}");
    }

    #[test]
    fn scaling_of_square() {
        let g = square_tab(3 * 4096);
        let r = scaling_invariance_check(&g, 7, 3).unwrap();
        assert!(r.difference <= 0.1 && r.holds, "{r:?}");
        let r = scaling_invariance_check(&g, 1, 1).unwrap();
        assert_eq!(r.difference, 0.0);
    }

    #[test]
    fn oscillation_trivial_cases() {
        let g = GrowthTab::tabulate(50, Label::Exact, |n| BigUint::from(n * n));
        let slow = GrowthTab::tabulate(50, Label::Exact, |n| BigUint::from(n * n * n));
        let fast = GrowthTab::tabulate(50, Label::Exact, BigUint::from);
        let r = oscillation_report(&g, &slow, &fast);
        assert_eq!(r.slow_hits.len(), 50);
        assert_eq!(r.fast_hits.len(), 50);
        assert_eq!(r.upper_density_slow, Ratio::from_integer(1));
        assert_eq!(r.upper_density_fast, Ratio::from_integer(1));
        let none_slow = GrowthTab::tabulate(50, Label::Exact, |_| BigUint::zero());
        let none_fast = GrowthTab::tabulate(50, Label::Exact, |_| BigUint::from(1u32 << 20));
        let r = oscillation_report(&g, &none_slow, &none_fast);
        assert!(r.slow_hits.is_empty() && r.fast_hits.is_empty());
        assert_eq!(r.upper_density_slow, Ratio::from_integer(0));
        assert_eq!(r.upper_density_fast, Ratio::from_integer(0));
    }

    #[test]
    fn density_is_prefix_maximum() {
        assert_eq!(upper_density(&[true, false, false, true]), Ratio::from_integer(1));
        assert_eq!(upper_density(&[false, true, false, true]), Ratio::new(1, 2));
        assert_eq!(upper_density(&[]), Ratio::from_integer(0));
    }

    #[test]
    fn zero_map_growth_collapses_to_base() {
        let g_b = BigUint::from(27u32);
        let (lo, hi) = compose_at(&g_b, &BigUint::zero(), &BigUint::zero());
        assert_eq!(lo, BigUint::zero());
        assert_eq!(hi, g_b);
    }

    #[test]
    fn rational_power_comparison() {
        let half = Ratio::new(13, 2);
        let n = BigUint::from(4u32);
        assert!(le_rational_power(&BigUint::from(8192u32), &n, half));
        assert!(!le_rational_power(&BigUint::from(8193u32), &n, half));
    }

    fn a1_config() -> PipelineConfig {
        let mut c = PipelineConfig::new(Mode::A1, BaseGrowth::Polynomial { degree: 3 });
        c.f_at_pow2 = Some(doubling(16));
        c.delta = Some(DeltaSpec::CeilSqrt);
        c
    }

    #[test]
    fn a1_pipeline_small() {
        let mut c = a1_config();
        c.n_max = 64;
        c.prefix_len = 1 << 12;
        let r = theorem_ab_pipeline(&c).unwrap();
        assert!(r.sandwich_ok);
        assert!(
            r.realization.iter().all(|x| x.holds),
            "{:?}",
            r.realization.iter().find(|x| !x.holds)
        );
        assert_eq!(r.cap_ok_at_largest, Some(true));
        assert!(r.passed);
    }

    #[test]
    fn a2_pipeline_small() {
        let mut c = a1_config();
        c.mode = Mode::A2;
        c.base = BaseGrowth::OmegaCubeRoot;
        c.omega = Some(TargetFn::TwoPowFloorSqrt);
        c.n_max = 64;
        c.prefix_len = 1 << 12;
        let r = theorem_ab_pipeline(&c).unwrap();
        assert!(r.sandwich_ok && r.passed, "{:?}", r.rows.last());
    }

    #[test]
    fn pipeline_errors_are_attributed() {
        let mut c = a1_config();
        c.f_at_pow2 = Some(vec![BigUint::from(2u32), BigUint::from(1u32)]);
        match theorem_ab_pipeline(&c) {
            Err(Error::InStage { stage, .. }) => assert_eq!(stage, "target"),
            other => panic!("{other:?}"),
        }
        let c = PipelineConfig::new(Mode::B2, BaseGrowth::Polynomial { degree: 3 });
        assert!(matches!(theorem_ab_pipeline(&c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn b_pipeline_one_stage() {
        let mut c = PipelineConfig::new(Mode::B1, BaseGrowth::Polynomial { degree: 3 });
        c.f1 = Some(TargetFn::FloorSqrt);
        c.f2 = Some(TargetFn::TwoPowFloorSqrt);
        c.stages = 1;
        let r = theorem_ab_pipeline(&c).unwrap();
        assert!(r.sandwich_ok);
        assert_eq!(r.scheduled_n, vec![BigUint::from(6u32)]);
        assert_eq!(r.scheduled_m, vec![BigUint::from(196u32)]);
        assert_eq!(r.fast_hits_at_all_n, Some(true));
        let osc = r.oscillation.unwrap();
        assert_eq!(osc.points, vec![BigUint::from(12u32), BigUint::from(196u32)]);

        c.mode = Mode::B2;
        c.base = BaseGrowth::OmegaCubeRoot;
        c.omega = Some(TargetFn::TwoPowFloorSqrt);
        let r = theorem_ab_pipeline(&c).unwrap();
        assert!(r.sandwich_ok && r.passed, "{:?}", r.rows);
    }

    proptest! {
        #[test]
        fn density_monotone_under_more_hits(mask in prop::collection::vec(any::<bool>(), 1..40), extra in 0usize..40) {
            let mut bigger = mask.clone();
            let i = extra % bigger.len();
            bigger[i] = true;
            prop_assert!(upper_density(&bigger) >= upper_density(&mask));
            prop_assert!(upper_density(&mask) <= Ratio::from_integer(1));
        }

        #[test]
        fn growth_from_complexity_increasing(pattern in prop::collection::vec(0u32..3, 1..8)) {
            let p = complexity_profile(&Periodic::new(pattern), 12, 64).unwrap();
            let g = growth_from_complexity(&p);
            prop_assert!(g.is_strictly_increasing());
            prop_assert!(g.is_submultiplicative());
        }

        #[test]
        fn scaling_by_constant_only_is_exact(c in 1u64..50) {
            let r = scaling_invariance_check(&square_tab(256), c, 1).unwrap();
            prop_assert!(r.difference < 1e-9);
        }
    }
}
