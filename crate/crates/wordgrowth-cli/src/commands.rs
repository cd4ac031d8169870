//! Subcommand arguments and their execution.

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use wordgrowth::analysis::{
    gk_estimate, growth_from_complexity, oscillation_report, scaling_invariance_check, theorem_ab_pipeline, BaseGrowth,
    DeltaSpec, Mode, PipelineConfig,
};
use wordgrowth::oscillator::{build_osc_schedule, verify_oscillation, TargetFn};
use wordgrowth::pbw::{enveloping_growth, euler_product, qdim_estimate};
use wordgrowth::sbm::{
    build_sb_sets, generate_s_prefix, generate_t_prefix, level_schedule_covering, verify_sbm_sandwich, GrowthTarget,
};
use wordgrowth::toeplitz::{
    build_rates, build_rates_auto, build_rates_raw, check_envelopes, check_rates, checkable_k, generate_toeplitz,
    parse_rational, theorem_d_profiles, EpochSchedule, RateSequences, ToeplitzParams,
};
use wordgrowth::words::{complexity_profile, profile_of_prefix, ComplexityProfile, Periodic, ThueMorse, WordPrefix};
use wordgrowth::wreath::{compose_growth_bounds, random_model, verify_decomposition, verify_decomposition_exhaustive};
use wordgrowth::{GrowthTab, Label};

use crate::artifact::{Outcome, Table};
use crate::{tables, CliError, Command};

fn to_json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn execute(command: &Command, seed: Option<u64>) -> Result<Outcome, CliError> {
    match command {
        Command::Complexity(a) => complexity(a),
        Command::Sbm(a) => sbm(a),
        Command::Oscillate(a) => oscillate(a),
        Command::Wreath(a) => wreath(a, seed),
        Command::Pbw(a) => pbw(a),
        Command::Toeplitz(a) => toeplitz(a),
        Command::Gkdim(a) => gkdim(a),
        Command::Oscillation(a) => oscillation(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn profile_table(p: &ComplexityProfile) -> Table {
    let mut t = Table::new(&["n", "p", "certified"]);
    for (i, (v, c)) in p.values.iter().zip(&p.certified).enumerate() {
        t.push(vec![(i + 1).to_string(), v.to_string(), c.to_string()]);
    }
    t
}

fn growth_table(g: &GrowthTab, column: &'static str) -> Table {
    let mut t = Table::new(&["n", column]);
    for (n, v) in g.values.iter().enumerate() {
        t.push(vec![n.to_string(), v.to_string()]);
    }
    t
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ComplexityArgs {
    /// `thue-morse`, `periodic:<letters>` or a file holding one serialized word.
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 16)]
    pub n_max: usize,
    /// Letters generated for streamed words.
    #[arg(long, default_value_t = 1024)]
    pub prefix_len: usize,
}

fn complexity(a: &ComplexityArgs) -> Result<Outcome, CliError> {
    let profile = if a.word == "thue-morse" {
        complexity_profile(&ThueMorse, a.n_max, a.prefix_len)?
    } else if let Some(pattern) = a.word.strip_prefix("periodic:") {
        let letters = tables::load_u64(pattern)?
            .into_iter()
            .map(|v| u32::try_from(v).map_err(|_| config_err("letter exceeds 32 bits")))
            .collect::<Result<Vec<_>, _>>()?;
        if letters.is_empty() {
            return Err(config_err("empty period"));
        }
        complexity_profile(&Periodic::new(letters), a.n_max, a.prefix_len)?
    } else {
        let text = std::fs::read_to_string(&a.word).map_err(|e| config_err(format!("{}: {e}", a.word)))?;
        let prefix = WordPrefix::parse_line(text.trim(), a.word.clone())?;
        profile_of_prefix(&prefix.erase_levels(), a.n_max)?
    };
    let growth = growth_from_complexity(&profile);
    Ok(Outcome {
        summary: format!(
            "p({}) = {}, certified to n = {}",
            profile.n_max(),
            profile.p(profile.n_max()),
            profile.horizon
        ),
        result: json!({ "profile": to_json(&profile)?, "growth": to_json(&growth)? }),
        table: profile_table(&profile),
        check_failed: false,
    })
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SbmEmit {
    Word,
    Profile,
    Report,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SbmArgs {
    /// Values `f(1), f(2), f(4), ...`.
    #[arg(long)]
    pub f_table: String,
    /// Number of set levels; defaults to covering `--len`. The table is
    /// continued by squaring past its last entry.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Values `delta(1), delta(2), ...`; raises the word to its leveled form.
    #[arg(long)]
    pub delta_table: Option<String>,
    #[arg(long, default_value_t = 1024)]
    pub len: usize,
    #[arg(long, value_enum, default_value_t = SbmEmit::Report)]
    pub emit: SbmEmit,
    /// Largest length profiled or checked.
    #[arg(long, default_value_t = 16)]
    pub n_max: usize,
    /// Add a word using every letter to each set.
    #[arg(long)]
    pub force_full_word: bool,
}

fn sbm(a: &SbmArgs) -> Result<Outcome, CliError> {
    let f = GrowthTarget::new(tables::load(&a.f_table)?)?;
    let depth = a.depth.unwrap_or(a.len.next_power_of_two().trailing_zeros() as usize);
    let sets = build_sb_sets(&f.extend_by_squaring(depth), depth, a.force_full_word)?;
    match a.emit {
        SbmEmit::Word => {
            let prefix = match &a.delta_table {
                Some(src) => {
                    let mut delta = vec![0];
                    delta.extend(tables::load_u64(src)?);
                    let schedule = level_schedule_covering(&delta, a.len)?;
                    generate_t_prefix(&sets, &schedule, a.len)?
                }
                None => generate_s_prefix(&sets, a.len)?,
            };
            let mut t = Table::new(&["position", "letter", "level"]);
            for i in 0..prefix.len() {
                let level = prefix.levels.as_ref().map_or(String::new(), |l| l[i].to_string());
                t.push(vec![i.to_string(), prefix.letters[i].to_string(), level]);
            }
            Ok(Outcome {
                summary: format!("{} letters over {} symbols", prefix.len(), sets.alphabet()),
                result: json!({ "sets": to_json(&sets)?, "word": prefix.to_line() }),
                table: t,
                check_failed: false,
            })
        }
        SbmEmit::Profile => {
            let prefix = generate_s_prefix(&sets, a.len)?;
            let profile = profile_of_prefix(&prefix, a.n_max)?;
            Ok(Outcome {
                summary: format!("p({}) = {}", a.n_max, profile.p(a.n_max)),
                result: json!({ "sets": to_json(&sets)?, "profile": to_json(&profile)? }),
                table: profile_table(&profile),
                check_failed: false,
            })
        }
        SbmEmit::Report => {
            let prefix = generate_s_prefix(&sets, a.len)?;
            let profile = profile_of_prefix(&prefix, (2 * a.n_max).min(a.len / 2))?;
            let report = verify_sbm_sandwich(&profile, &f, a.n_max);
            let mut t = Table::new(&["n", "f_n", "h_2n", "lower_ok", "h_n", "cubic_ok", "quadratic_ok"]);
            for r in &report.rows {
                t.push(vec![
                    r.n.to_string(),
                    r.f_n.to_string(),
                    r.h_2n.to_string(),
                    r.lower_ok.to_string(),
                    r.h_n.to_string(),
                    r.cubic_ok.to_string(),
                    r.quadratic_ok.map_or(String::new(), |b| b.to_string()),
                ]);
            }
            let ok = report.all_ok();
            Ok(Outcome {
                summary: format!(
                    "{} rows checked, {}{}",
                    report.rows.len(),
                    if ok { "all bounds hold" } else { "a bound fails" },
                    if report.complete { "" } else { " (range incomplete)" }
                ),
                result: json!({ "divisible": f.divisible(), "report": to_json(&report)? }),
                table: t,
                check_failed: !ok,
            })
        }
    }
}

/// A target given by name (`floor-sqrt`, `two-pow-floor-sqrt`, `const:<v>`) or by table.
fn target(name: &Option<String>, table: &Option<String>, what: &str) -> Result<TargetFn, CliError> {
    match (name, table) {
        (Some(_), Some(_)) => Err(config_err(format!("give --{what} or --{what}-table, not both"))),
        (None, Some(src)) => Ok(TargetFn::Table {
            values: tables::load(src)?,
        }),
        (Some(n), None) => match n.as_str() {
            "floor-sqrt" => Ok(TargetFn::FloorSqrt),
            "two-pow-floor-sqrt" => Ok(TargetFn::TwoPowFloorSqrt),
            other => match other.strip_prefix("const:") {
                Some(v) => Ok(TargetFn::Constant {
                    value: v.parse().map_err(|_| config_err(format!("bad constant {v:?}")))?,
                }),
                None => Err(config_err(format!("unknown target {other:?}"))),
            },
        },
        (None, None) => Err(config_err(format!("--{what} or --{what}-table is required"))),
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OscEmit {
    Schedule,
    Report,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OscillateArgs {
    /// Slow target by name: `floor-sqrt`, `two-pow-floor-sqrt`, `const:<v>`.
    #[arg(long)]
    pub f1: Option<String>,
    /// Slow target values `f1(0), f1(1), ...`.
    #[arg(long)]
    pub f1_table: Option<String>,
    /// Fast target by name.
    #[arg(long)]
    pub f2: Option<String>,
    /// Fast target values `f2(0), f2(1), ...`.
    #[arg(long)]
    pub f2_table: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    #[arg(long, value_enum, default_value_t = OscEmit::Report)]
    pub emit: OscEmit,
}

fn oscillate(a: &OscillateArgs) -> Result<Outcome, CliError> {
    let f1 = target(&a.f1, &a.f1_table, "f1")?;
    let f2 = target(&a.f2, &a.f2_table, "f2")?;
    let schedule = build_osc_schedule(&f1, &f2, a.stages)?;
    let mut t = Table::new(&["stage", "n", "k", "m"]);
    for (i, st) in schedule.stages.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            st.n.to_string(),
            st.k.to_string(),
            st.m.to_string(),
        ]);
    }
    let summary = format!("p = {}, {} stages", schedule.p, schedule.stages.len());
    match a.emit {
        OscEmit::Schedule => Ok(Outcome {
            summary,
            result: json!({ "schedule": to_json(&schedule)? }),
            table: t,
            check_failed: false,
        }),
        OscEmit::Report => {
            let checks = verify_oscillation(&schedule)?;
            let ok = checks.iter().all(|c| c.fast_ok && c.slow_ok);
            let mut t = Table::new(&[
                "stage", "n", "w_at_n", "f2_at_n", "fast_ok", "m", "w_at_m", "f1_at_m", "slow_ok",
            ]);
            for c in &checks {
                t.push(vec![
                    c.stage.to_string(),
                    c.n.to_string(),
                    c.w_at_n.to_string(),
                    c.f2_at_n.to_string(),
                    c.fast_ok.to_string(),
                    c.m.to_string(),
                    c.w_at_m.to_string(),
                    c.f1_at_m.to_string(),
                    c.slow_ok.to_string(),
                ]);
            }
            Ok(Outcome {
                summary: format!("{summary}, stage checks {}", if ok { "hold" } else { "fail" }),
                result: json!({ "schedule": to_json(&schedule)?, "checks": to_json(&checks)? }),
                table: t,
                check_failed: !ok,
            })
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WreathMode {
    Bounds,
    Verify,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WreathArgs {
    #[arg(long, value_enum)]
    pub mode: WreathMode,
    /// Base growth `g_B(0), g_B(1), ...`.
    #[arg(long = "gB-csv")]
    pub g_b_csv: Option<String>,
    /// Map growth `w(0), w(1), ...`.
    #[arg(long)]
    pub w_csv: Option<String>,
    /// Word length of the products checked.
    #[arg(long, default_value_t = 3)]
    pub s: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Basis size of the random base model, unit included.
    #[arg(long, default_value_t = 3)]
    pub basis: usize,
    #[arg(long, default_value_t = 2)]
    pub letters: u32,
    /// Largest monomial degree kept in the free algebra.
    #[arg(long, default_value_t = 4)]
    pub cap: usize,
    /// Check every basis word instead of random trials.
    #[arg(long)]
    pub exhaustive: bool,
}

fn wreath(a: &WreathArgs, seed: Option<u64>) -> Result<Outcome, CliError> {
    match a.mode {
        WreathMode::Bounds => {
            let load = |src: &Option<String>, flag: &str| -> Result<GrowthTab, CliError> {
                let src = src
                    .as_ref()
                    .ok_or_else(|| config_err(format!("--{flag} is required")))?;
                Ok(GrowthTab::new(tables::load(src)?, Label::Exact))
            };
            let g_b = load(&a.g_b_csv, "gB-csv")?;
            let w = load(&a.w_csv, "w-csv")?;
            let (lower, upper) = compose_growth_bounds(&g_b, &w)?;
            let mut t = Table::new(&["n", "g_b", "w", "lower", "upper"]);
            for n in 0..lower.len() {
                t.push(vec![
                    n.to_string(),
                    g_b.values[n].to_string(),
                    w.values[n].to_string(),
                    lower.values[n].to_string(),
                    upper.values[n].to_string(),
                ]);
            }
            let ok = lower.values.iter().zip(&upper.values).all(|(l, u)| l <= u);
            Ok(Outcome {
                summary: format!("bounds on 0..={}", lower.n_max()),
                result: json!({ "lower": to_json(&lower)?, "upper": to_json(&upper)? }),
                table: t,
                check_failed: !ok,
            })
        }
        WreathMode::Verify => {
            let seed = seed.ok_or_else(|| config_err("--seed is required for randomized verification"))?;
            if a.basis < 2 {
                return Err(config_err("--basis counts the unit and must be at least 2"));
            }
            let model = random_model(a.basis - 1, a.letters, a.cap, seed)?;
            let report = if a.exhaustive {
                verify_decomposition_exhaustive(&model, a.s)?
            } else {
                verify_decomposition(&model, a.s, a.trials, seed)?
            };
            let mut t = Table::new(&["trial", "b", "x", "outcome"]);
            for (i, tr) in report.trials.iter().enumerate() {
                let b: Vec<String> = tr.b.iter().map(ToString::to_string).collect();
                t.push(vec![
                    i.to_string(),
                    b.join(" "),
                    tr.x.to_string(),
                    to_json(&tr.outcome)?.as_str().unwrap_or_default().to_string(),
                ]);
            }
            Ok(Outcome {
                summary: format!(
                    "s = {}: {} passed, {} failed, {} skipped",
                    report.s, report.passed, report.failed, report.skipped
                ),
                check_failed: report.failed > 0,
                result: json!({ "model": to_json(&model)?, "report": to_json(&report)? }),
                table: t,
            })
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
pub enum PbwEmit {
    #[value(name = "series")]
    #[serde(rename = "series")]
    Series,
    #[value(name = "gU")]
    #[serde(rename = "gU")]
    GU,
    #[value(name = "qdim")]
    #[serde(rename = "qdim")]
    QDim,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PbwArgs {
    /// Increments `b_1, b_2, ...`.
    #[arg(long)]
    pub b_csv: String,
    /// Series degree.
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = PbwEmit::Series)]
    pub emit: PbwEmit,
    /// Level of the q-dimension scale.
    #[arg(long, default_value_t = 3)]
    pub q: u32,
}

fn pbw(a: &PbwArgs) -> Result<Outcome, CliError> {
    let b = tables::load_u64(&a.b_csv)?;
    match a.emit {
        PbwEmit::Series => {
            let series = euler_product(&b, a.n)?;
            let mut t = Table::new(&["n", "a_n"]);
            for (n, c) in series.coeffs.iter().enumerate() {
                t.push(vec![n.to_string(), c.to_string()]);
            }
            let last = series.coeff(a.n);
            Ok(Outcome {
                summary: format!("a_{} = {last}", a.n),
                result: json!({ "series": to_json(&series)?, "a_N": last.to_string() }),
                table: t,
                check_failed: false,
            })
        }
        PbwEmit::GU | PbwEmit::QDim => {
            let (g, series) = enveloping_growth(&b, a.n)?;
            if let PbwEmit::GU = a.emit {
                return Ok(Outcome {
                    summary: format!("g_U({}) = {}", a.n, g.values[a.n]),
                    result: json!({ "growth": to_json(&g)?, "series": to_json(&series)? }),
                    table: growth_table(&g, "g"),
                    check_failed: false,
                });
            }
            let est = qdim_estimate(&g, a.q)?;
            let mut t = Table::new(&["q", "lower_est", "upper_est", "window_from", "window_to"]);
            t.push(vec![
                est.q.to_string(),
                est.lower_est.to_string(),
                est.upper_est.to_string(),
                est.window.0.to_string(),
                est.window.1.to_string(),
            ]);
            Ok(Outcome {
                summary: format!(
                    "q = {}: estimate in [{:.4}, {:.4}]",
                    est.q, est.lower_est, est.upper_est
                ),
                result: json!({ "qdim": to_json(&est)? }),
                table: t,
                check_failed: false,
            })
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToeplitzEmit {
    Rates,
    Word,
    Envelopes,
    TheoremD,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateBuilder {
    /// The recurrences as stated.
    Raw,
    /// The recurrences, rejecting parameters that break the growth caps.
    Checked,
    /// The recurrences with `t` raised until the caps hold.
    Auto,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSequence {
    X,
    Y,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ToeplitzArgs {
    #[arg(long, default_value = "3")]
    pub alpha: String,
    #[arg(long, default_value = "3")]
    pub beta: String,
    #[arg(long, default_value = "2")]
    pub gamma: String,
    #[arg(long, default_value_t = 4)]
    pub s: u64,
    #[arg(long, default_value_t = 2)]
    pub t: u64,
    /// First epoch start.
    #[arg(long, default_value_t = 5)]
    pub d1: u64,
    #[arg(long, default_value_t = 40)]
    pub kmax: usize,
    #[arg(long, default_value_t = 15625)]
    pub prefix_len: usize,
    #[arg(long, value_enum, default_value_t = ToeplitzEmit::Rates)]
    pub emit: ToeplitzEmit,
    #[arg(long, value_enum, default_value_t = RateBuilder::Raw)]
    pub rates: RateBuilder,
    /// Rate sequence driving the word: `x` uses `n_k`, `y` uses `m_k`.
    #[arg(long, value_enum, default_value_t = RateSequence::X)]
    pub sequence: RateSequence,
}

fn toeplitz(a: &ToeplitzArgs) -> Result<Outcome, CliError> {
    let params = ToeplitzParams::new(
        parse_rational(&a.alpha)?,
        parse_rational(&a.beta)?,
        parse_rational(&a.gamma)?,
        a.s,
        a.t,
    )?;
    if let ToeplitzEmit::TheoremD = a.emit {
        let d = theorem_d_profiles(&params, a.d1, a.kmax)?;
        let mut t = Table::new(&["k", "g_x_hi", "g_x_lo", "g_y_hi", "g_y_lo", "tensor_hi", "tensor_lo"]);
        for i in 0..d.g_x_hi.values.len() {
            t.push(vec![
                (i + 1).to_string(),
                d.g_x_hi.values[i].to_string(),
                d.g_x_lo.values[i].to_string(),
                d.g_y_hi.values[i].to_string(),
                d.g_y_lo.values[i].to_string(),
                d.tensor_hi.values[i].to_string(),
                d.tensor_lo.values[i].to_string(),
            ]);
        }
        return Ok(Outcome {
            summary: format!("profiles for k = 1..={} (t = {})", a.kmax, d.rates.params.t),
            result: json!({ "theorem_d": to_json(&d)? }),
            table: t,
            check_failed: false,
        });
    }
    let schedule = EpochSchedule::new(a.d1, a.kmax as u64)?;
    let rates: RateSequences = match a.rates {
        RateBuilder::Raw => build_rates_raw(&params, &schedule, a.kmax)?,
        RateBuilder::Checked => build_rates(&params, &schedule, a.kmax)?,
        RateBuilder::Auto => build_rates_auto(&params, &schedule, a.kmax)?,
    };
    let seq = match a.sequence {
        RateSequence::X => &rates.n,
        RateSequence::Y => &rates.m,
    };
    match a.emit {
        ToeplitzEmit::Rates => {
            let checks = check_rates(&rates);
            let mut t = Table::new(&["k", "n_k", "m_k"]);
            for k in 1..=rates.k_max() {
                t.push(vec![
                    k.to_string(),
                    rates.n_at(k).to_string(),
                    rates.m_at(k).to_string(),
                ]);
            }
            Ok(Outcome {
                summary: format!("rates for k = 1..={}", rates.k_max()),
                result: json!({ "rates": to_json(&rates)?, "checks": to_json(&checks)? }),
                table: t,
                check_failed: false,
            })
        }
        ToeplitzEmit::Word | ToeplitzEmit::Envelopes => {
            let word = generate_toeplitz(seq, a.prefix_len)?;
            let letters = word.materialize(a.prefix_len);
            let checks = check_envelopes(&letters, seq, checkable_k(a.prefix_len))?;
            let ok = checks.iter().all(|c| c.inside);
            let summary = format!(
                "{} letters, p(5^k) inside the envelope for k = 1..={}",
                letters.len(),
                checks.len()
            );
            if let ToeplitzEmit::Word = a.emit {
                let mut t = Table::new(&["position", "letter"]);
                for (i, l) in letters.iter().enumerate() {
                    t.push(vec![i.to_string(), l.to_string()]);
                }
                return Ok(Outcome {
                    summary,
                    result: json!({
                        "generator": to_json(&word)?,
                        "word": WordPrefix::new(letters, "toeplitz").to_line(),
                        "envelopes": to_json(&checks)?,
                    }),
                    table: t,
                    check_failed: !ok,
                });
            }
            let mut t = Table::new(&["k", "measured", "lo", "hi", "inside"]);
            for c in &checks {
                t.push(vec![
                    c.k.to_string(),
                    c.measured.to_string(),
                    c.lo.to_string(),
                    c.hi.to_string(),
                    c.inside.to_string(),
                ]);
            }
            Ok(Outcome {
                summary,
                result: json!({ "generator": to_json(&word)?, "envelopes": to_json(&checks)? }),
                table: t,
                check_failed: !ok,
            })
        }
        ToeplitzEmit::TheoremD => unreachable!(),
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GkdimArgs {
    /// Growth values `g(0), g(1), ...`.
    #[arg(long)]
    pub g_csv: String,
    /// Also compare with `n -> c g(d n)`.
    #[arg(long, requires = "scale_d")]
    pub scale_c: Option<u64>,
    #[arg(long, requires = "scale_c")]
    pub scale_d: Option<u64>,
}

fn gkdim(a: &GkdimArgs) -> Result<Outcome, CliError> {
    let g = GrowthTab::new(tables::load(&a.g_csv)?, Label::Exact);
    let est = gk_estimate(&g)?;
    let scaling = match (a.scale_c, a.scale_d) {
        (Some(c), Some(d)) => Some(scaling_invariance_check(&g, c, d)?),
        _ => None,
    };
    let mut t = Table::new(&["n", "estimate"]);
    for (n, s) in &est.point_estimates {
        t.push(vec![n.to_string(), s.to_string()]);
    }
    Ok(Outcome {
        summary: format!(
            "limsup estimate {:.4} over n in [{}, {})",
            est.limsup_est, est.window.0, est.window.1
        ),
        check_failed: scaling.as_ref().is_some_and(|s| !s.holds),
        result: json!({ "estimate": to_json(&est)?, "scaling": to_json(&scaling)? }),
        table: t,
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OscillationArgs {
    #[arg(long)]
    pub g_csv: String,
    #[arg(long)]
    pub slow_csv: String,
    #[arg(long)]
    pub fast_csv: String,
}

fn oscillation(a: &OscillationArgs) -> Result<Outcome, CliError> {
    let tab = |src: &str| -> Result<GrowthTab, CliError> { Ok(GrowthTab::new(tables::load(src)?, Label::Exact)) };
    let g = tab(&a.g_csv)?;
    let report = oscillation_report(&g, &tab(&a.slow_csv)?, &tab(&a.fast_csv)?);
    let mut t = Table::new(&["n", "slow_hit", "fast_hit"]);
    for p in &report.points {
        t.push(vec![
            p.to_string(),
            report.slow_hits.contains(p).to_string(),
            report.fast_hits.contains(p).to_string(),
        ]);
    }
    Ok(Outcome {
        summary: format!(
            "{} slow hits, {} fast hits; upper densities {} and {}",
            report.slow_hits.len(),
            report.fast_hits.len(),
            report.upper_density_slow,
            report.upper_density_fast
        ),
        result: json!({ "oscillation": to_json(&report)? }),
        table: t,
        check_failed: false,
    })
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[value(rename_all = "UPPER")]
pub enum ModeArg {
    A1,
    A2,
    B1,
    B2,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PipelineArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Base growth stand-in: `poly:<degree>`, `omega-cube-root` or a table.
    #[arg(long, default_value = "poly:3")]
    pub base: String,
    /// Values `f(1), f(2), f(4), ...` for the realizing modes.
    #[arg(long)]
    pub f_table: Option<String>,
    /// `ceil-sqrt` or a table `delta(1), delta(2), ...`.
    #[arg(long, default_value = "ceil-sqrt")]
    pub delta: String,
    /// Slow target of the oscillating modes, by name.
    #[arg(long)]
    pub f1: Option<String>,
    #[arg(long)]
    pub f1_table: Option<String>,
    /// Fast target of the oscillating modes, by name.
    #[arg(long)]
    pub f2: Option<String>,
    #[arg(long)]
    pub f2_table: Option<String>,
    /// Stages of the oscillating schedule.
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    /// Super-polynomial cap by name or table, for A2 and B2.
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub omega_table: Option<String>,
    #[arg(long, default_value_t = 512)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1 << 15)]
    pub prefix_len: usize,
    #[arg(long, default_value = "1/2")]
    pub epsilon: String,
}

fn pipeline(a: &PipelineArgs) -> Result<Outcome, CliError> {
    let mode = match a.mode {
        ModeArg::A1 => Mode::A1,
        ModeArg::A2 => Mode::A2,
        ModeArg::B1 => Mode::B1,
        ModeArg::B2 => Mode::B2,
    };
    let base = match a.base.as_str() {
        "omega-cube-root" => BaseGrowth::OmegaCubeRoot,
        b => match b.strip_prefix("poly:") {
            Some(d) => BaseGrowth::Polynomial {
                degree: d.parse().map_err(|_| config_err(format!("bad degree {d:?}")))?,
            },
            None => BaseGrowth::Table {
                values: tables::load(b)?,
            },
        },
    };
    let mut config = PipelineConfig::new(mode, base);
    config.n_max = a.n_max;
    config.prefix_len = a.prefix_len;
    config.stages = a.stages;
    config.epsilon = parse_rational(&a.epsilon)?;
    config.delta = Some(match a.delta.as_str() {
        "ceil-sqrt" => DeltaSpec::CeilSqrt,
        src => {
            let mut values = vec![0];
            values.extend(tables::load_u64(src)?);
            DeltaSpec::Table { values }
        }
    });
    if let Some(src) = &a.f_table {
        config.f_at_pow2 = Some(tables::load(src)?);
    }
    if a.f1.is_some() || a.f1_table.is_some() {
        config.f1 = Some(target(&a.f1, &a.f1_table, "f1")?);
    }
    if a.f2.is_some() || a.f2_table.is_some() {
        config.f2 = Some(target(&a.f2, &a.f2_table, "f2")?);
    }
    if a.omega.is_some() || a.omega_table.is_some() {
        config.omega = Some(target(&a.omega, &a.omega_table, "omega")?);
    }
    let report = theorem_ab_pipeline(&config)?;
    let mut t = Table::new(&[
        "n",
        "g_b",
        "w",
        "w_certified",
        "lower",
        "upper",
        "sandwich_ok",
        "cap_ok",
        "slow_hit",
        "fast_hit",
    ]);
    let opt = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
    for r in &report.rows {
        t.push(vec![
            r.n.to_string(),
            r.g_b.to_string(),
            r.w.to_string(),
            r.w_certified.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.sandwich_ok.to_string(),
            opt(r.cap_ok),
            opt(r.slow_hit),
            opt(r.fast_hit),
        ]);
    }
    let asserted = report.asserted_ok();
    let mut summary = format!(
        "{:?}: {} rows, lower <= upper {}",
        mode,
        report.rows.len(),
        if report.sandwich_ok { "everywhere" } else { "violated" }
    );
    if let Some(osc) = &report.oscillation {
        summary += &format!(
            ", {} slow and {} fast hits over {} points",
            osc.slow_hits.len(),
            osc.fast_hits.len(),
            osc.points.len()
        );
    }
    Ok(Outcome {
        summary,
        result: json!({ "config": to_json(&config)?, "report": to_json(&report)?, "asserted_ok": asserted }),
        table: t,
        check_failed: !asserted,
    })
}
