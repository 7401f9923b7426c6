//! Command-line front end: scenario files, the four workflows and artifact
//! output.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "game": { "local_iters": 1, "max_rounds": 2, "theta0": 100, "theta1": 100,
//!             "orgs": [{ "unit_revenue": 50, "iter_cost": 0.6, "comm_cost": 0.05 }, ...] },
//!   "roster": ["MMZD", "ALLD", "TFT", "RAND"],
//!   "zd": { "org": 0, "phi": 0.01 },
//!   "experiment": { "rounds": 2000, "seed": 7 },
//!   "output": { "directory": "out", "svg": true }
//! }
//! ```
//!
//! Every command writes the normalized scenario (all defaults filled in) to
//! `scenario.json` in the output directory; parsing that file again yields
//! the same scenario.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{
    dilemma_condition, find_pure_nash, GameConfig, OrgProfile, DEFAULT_ENUMERATION_BUDGET,
};
use crate::rng;
use crate::sim_engine::{
    run_ensemble, sweep_alliance_size, sweep_population, AllianceDraw, AllianceSize, GameParams,
    OrgSampler, PopulationGenerator, Roster, SimTrace, SweepResult,
};
use crate::state_space::StateIndex;
use crate::strategies::{AgentKind, FirstRoundPrior};
use crate::zd_core::DEFAULT_DENSE_BUDGET;
use crate::zd_synthesis::{
    effective_game, synthesize_alliance, AllianceSpec, CompletionPolicy, ZdSolution,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Io(_) => EXIT_RUNTIME,
        _ => EXIT_CONFIG,
    }
}

// ---------------------------------------------------------------------------
// Scenario file format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    game: GameFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    roster: Option<Vec<AgentKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zd: Option<ZdFile>,
    #[serde(default)]
    experiment: ExperimentFile,
    #[serde(default)]
    output: OutputFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_orgs: Option<usize>,
    local_iters: u32,
    max_rounds: u32,
    theta0: f64,
    theta1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    orgs: Option<Vec<OrgProfile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<SampledGame>,
}

/// Organizations drawn from `sampler` with a dedicated seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledGame {
    seed: u64,
    #[serde(default)]
    sampler: OrgSampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZdFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    org: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leader: Option<usize>,
    phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    completion: Option<CompletionPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prior: Option<FirstRoundPrior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    enumeration_budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    AllianceSize,
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    axis: SweepAxis,
    values: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leader: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alliance_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alliance_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inner: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampler: Option<OrgSampler>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    directory: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    svg: Option<bool>,
}

// ---------------------------------------------------------------------------
// Validated scenario

#[derive(Debug, Clone, PartialEq)]
pub struct ZdSettings {
    pub alliance: AllianceSpec,
    pub phi: f64,
    pub alpha0: Option<f64>,
    pub completion: CompletionPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepSettings {
    AllianceSize {
        sizes: Vec<usize>,
        draws: usize,
        draw: AllianceDraw,
    },
    Population {
        n_values: Vec<usize>,
        alliance: AllianceSize,
        outer: usize,
        inner: usize,
        pool: usize,
        pool_seed: u64,
        sampler: OrgSampler,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub rounds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub prior: FirstRoundPrior,
    pub enumeration_budget: u64,
    pub dense_budget: u64,
    pub sweep: Option<SweepSettings>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub game: GameConfig,
    pub roster: Vec<AgentKind>,
    pub zd: Option<ZdSettings>,
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub svg: bool,
}

fn scenario_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Scenario {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Prefixes parameter errors with the scenario block they came from.
fn in_block(block: &str, err: Error) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => {
            scenario_err(&format!("{block}.{name}"), reason)
        }
        other => other,
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| {
        scenario_err(
            &path.display().to_string(),
            format!("cannot read file: {e}"),
        )
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        scenario_err(&path, e.into_inner().to_string())
    })?;
    resolve(file)
}

fn resolve(file: ScenarioFile) -> Result<Scenario> {
    let game = resolve_game(file.game)?;
    let n = game.n_orgs;

    let zd = file.zd.map(|z| resolve_zd(z, &game)).transpose()?;

    let roster = match file.roster {
        Some(r) => {
            if r.len() != n {
                return Err(scenario_err(
                    "roster",
                    format!("{} entries for {n} organizations", r.len()),
                ));
            }
            r
        }
        None => (0..n)
            .map(|i| match &zd {
                Some(z) if z.alliance.contains(i) => {
                    if z.alliance.len() == 1 {
                        AgentKind::Mmzd
                    } else {
                        AgentKind::Mmzda
                    }
                }
                _ => AgentKind::Rand,
            })
            .collect(),
    };
    for (i, k) in roster.iter().enumerate() {
        let zd_kind = matches!(k, AgentKind::Mmzd | AgentKind::Mmzda);
        let member = zd.as_ref().is_some_and(|z| z.alliance.contains(i));
        if zd_kind != member {
            return Err(scenario_err(
                &format!("roster[{i}]"),
                if member {
                    format!("organization {i} belongs to the zd block but is labelled {k}")
                } else {
                    format!("{k} needs organization {i} in the zd block")
                },
            ));
        }
    }

    let e = file.experiment;
    let rounds = e.rounds.unwrap_or(20);
    let repeats = e.repeats.unwrap_or(1);
    if rounds == 0 {
        return Err(scenario_err("experiment.rounds", "must be at least 1"));
    }
    if repeats == 0 {
        return Err(scenario_err("experiment.repeats", "must be at least 1"));
    }
    let sweep = e.sweep.map(|s| resolve_sweep(s, &game)).transpose()?;
    let experiment = Experiment {
        rounds,
        repeats,
        seed: e.seed.unwrap_or(0),
        prior: e.prior.unwrap_or_default(),
        enumeration_budget: e.enumeration_budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET),
        dense_budget: e.dense_budget.unwrap_or(DEFAULT_DENSE_BUDGET),
        sweep,
    };

    Ok(Scenario {
        game,
        roster,
        zd,
        experiment,
        output_dir: file
            .output
            .directory
            .unwrap_or_else(|| PathBuf::from("out")),
        svg: file.output.svg.unwrap_or(false),
    })
}

fn resolve_game(g: GameFile) -> Result<GameConfig> {
    let params = GameParams {
        local_iters: g.local_iters,
        max_rounds: g.max_rounds,
        theta0: g.theta0,
        theta1: g.theta1,
    };
    let orgs = match (g.orgs, g.sampled) {
        (Some(orgs), None) => {
            if let Some(n) = g.n_orgs {
                if n != orgs.len() {
                    return Err(scenario_err(
                        "game.n_orgs",
                        format!("{n} does not match the {} listed organizations", orgs.len()),
                    ));
                }
            }
            orgs
        }
        (None, Some(s)) => {
            let n = g
                .n_orgs
                .ok_or_else(|| scenario_err("game.n_orgs", "required with `sampled`"))?;
            s.sampler
                .validate()
                .map_err(|e| in_block("game.sampled", e))?;
            let mut r = rng::stream(s.seed, 0);
            s.sampler
                .sample_game(&params, n, &mut r)
                .map_err(|e| in_block("game.sampled", e))?
                .orgs
        }
        (Some(_), Some(_)) => {
            return Err(scenario_err(
                "game",
                "give either `orgs` or `sampled`, not both",
            ))
        }
        (None, None) => return Err(scenario_err("game", "missing `orgs` or `sampled`")),
    };
    params.game(orgs).map_err(|e| in_block("game", e))
}

fn resolve_zd(z: ZdFile, game: &GameConfig) -> Result<ZdSettings> {
    if z.phi == 0.0 || !z.phi.is_finite() {
        return Err(scenario_err("zd.phi", "must be finite and non-zero"));
    }
    let alliance = match (z.org, z.members) {
        (Some(_), Some(_)) => {
            return Err(scenario_err(
                "zd",
                "give either `org` or `members`, not both",
            ))
        }
        (Some(org), None) => {
            if z.leader.is_some_and(|l| l != org) {
                return Err(scenario_err("zd.leader", "must equal `org`"));
            }
            AllianceSpec::singleton(org, game)
        }
        (None, Some(members)) => {
            let leader = z
                .leader
                .ok_or_else(|| scenario_err("zd.leader", "required with `members`"))?;
            AllianceSpec::new(members, leader, game)
        }
        (None, None) => AllianceSpec::singleton(z.leader.unwrap_or(0), game),
    }
    .map_err(|e| in_block("zd", e))?;
    if let Some(a) = z.alpha0 {
        if !a.is_finite() {
            return Err(scenario_err("zd.alpha0", "must be finite"));
        }
    }
    Ok(ZdSettings {
        alliance,
        phi: z.phi,
        alpha0: z.alpha0,
        completion: z.completion.unwrap_or_default(),
    })
}

fn resolve_sweep(s: SweepFile, game: &GameConfig) -> Result<SweepSettings> {
    if s.values.is_empty() {
        return Err(scenario_err(
            "experiment.sweep.values",
            "sweep axis is empty",
        ));
    }
    let stray = |name: &str, present: bool| {
        if present {
            Err(scenario_err(
                &format!("experiment.sweep.{name}"),
                format!("not used by the {:?} axis", s.axis),
            ))
        } else {
            Ok(())
        }
    };
    match s.axis {
        SweepAxis::AllianceSize => {
            stray("alliance_size", s.alliance_size.is_some())?;
            stray("alliance_ratio", s.alliance_ratio.is_some())?;
            stray("outer", s.outer.is_some())?;
            stray("inner", s.inner.is_some())?;
            stray("pool", s.pool.is_some())?;
            stray("pool_seed", s.pool_seed.is_some())?;
            stray("sampler", s.sampler.is_some())?;
            if let Some(&v) = s.values.iter().find(|&&v| v == 0 || v > game.n_orgs) {
                return Err(scenario_err(
                    "experiment.sweep.values",
                    format!("alliance size {v} outside 1..={}", game.n_orgs),
                ));
            }
            let draw = match s.leader {
                Some(leader) if leader >= game.n_orgs => {
                    return Err(scenario_err(
                        "experiment.sweep.leader",
                        format!("{leader} is not below N = {}", game.n_orgs),
                    ))
                }
                Some(leader) => AllianceDraw::Nested { leader },
                None => AllianceDraw::Random,
            };
            let draws = s.draws.unwrap_or(20);
            if draws == 0 {
                return Err(scenario_err("experiment.sweep.draws", "must be at least 1"));
            }
            Ok(SweepSettings::AllianceSize {
                sizes: s.values,
                draws,
                draw,
            })
        }
        SweepAxis::Population => {
            stray("draws", s.draws.is_some())?;
            stray("leader", s.leader.is_some())?;
            let alliance = match (s.alliance_size, s.alliance_ratio) {
                (Some(k), None) => AllianceSize::Fixed(k),
                (None, Some(f)) => AllianceSize::Ratio(f),
                _ => {
                    return Err(scenario_err(
                        "experiment.sweep",
                        "give exactly one of `alliance_size` or `alliance_ratio`",
                    ))
                }
            };
            let max_n = *s.values.iter().max().unwrap_or(&0);
            for &n in &s.values {
                if n < 2 {
                    return Err(scenario_err(
                        "experiment.sweep.values",
                        "populations need at least two organizations",
                    ));
                }
                alliance
                    .for_population(n)
                    .map_err(|e| in_block("experiment.sweep", e))?;
            }
            let pool = s.pool.unwrap_or(2 * max_n);
            if pool < max_n {
                return Err(scenario_err(
                    "experiment.sweep.pool",
                    format!("pool of {pool} cannot supply {max_n} organizations"),
                ));
            }
            let outer = s.outer.unwrap_or(10);
            let inner = s.inner.unwrap_or(10);
            if outer == 0 || inner == 0 {
                return Err(scenario_err(
                    "experiment.sweep",
                    "`outer` and `inner` must be at least 1",
                ));
            }
            let sampler = s.sampler.unwrap_or_default();
            sampler
                .validate()
                .map_err(|e| in_block("experiment.sweep", e))?;
            Ok(SweepSettings::Population {
                n_values: s.values,
                alliance,
                outer,
                inner,
                pool,
                pool_seed: s.pool_seed.unwrap_or(0),
                sampler,
            })
        }
    }
}

/// Normalized scenario JSON with every default spelled out.
pub fn dump_scenario(s: &Scenario) -> String {
    let g = &s.game;
    let zd = s.zd.as_ref().map(|z| {
        let single = z.alliance.len() == 1;
        ZdFile {
            org: single.then(|| z.alliance.leader()),
            members: (!single).then(|| z.alliance.members().to_vec()),
            leader: (!single).then(|| z.alliance.leader()),
            phi: z.phi,
            alpha0: z.alpha0,
            completion: Some(z.completion),
        }
    });
    let e = &s.experiment;
    let sweep = e.sweep.as_ref().map(|sw| match sw {
        SweepSettings::AllianceSize { sizes, draws, draw } => SweepFile {
            axis: SweepAxis::AllianceSize,
            values: sizes.clone(),
            draws: Some(*draws),
            leader: match draw {
                AllianceDraw::Nested { leader } => Some(*leader),
                AllianceDraw::Random => None,
            },
            alliance_size: None,
            alliance_ratio: None,
            outer: None,
            inner: None,
            pool: None,
            pool_seed: None,
            sampler: None,
        },
        SweepSettings::Population {
            n_values,
            alliance,
            outer,
            inner,
            pool,
            pool_seed,
            sampler,
        } => SweepFile {
            axis: SweepAxis::Population,
            values: n_values.clone(),
            draws: None,
            leader: None,
            alliance_size: match alliance {
                AllianceSize::Fixed(k) => Some(*k),
                AllianceSize::Ratio(_) => None,
            },
            alliance_ratio: match alliance {
                AllianceSize::Ratio(f) => Some(*f),
                AllianceSize::Fixed(_) => None,
            },
            outer: Some(*outer),
            inner: Some(*inner),
            pool: Some(*pool),
            pool_seed: Some(*pool_seed),
            sampler: Some(*sampler),
        },
    });
    let file = ScenarioFile {
        game: GameFile {
            n_orgs: Some(g.n_orgs),
            local_iters: g.local_iters,
            max_rounds: g.max_rounds,
            theta0: g.theta0,
            theta1: g.theta1,
            orgs: Some(g.orgs.clone()),
            sampled: None,
        },
        roster: Some(s.roster.clone()),
        zd,
        experiment: ExperimentFile {
            rounds: Some(e.rounds),
            repeats: Some(e.repeats),
            seed: Some(e.seed),
            prior: Some(e.prior),
            enumeration_budget: Some(e.enumeration_budget),
            dense_budget: Some(e.dense_budget),
            sweep,
        },
        output: OutputFile {
            directory: Some(s.output_dir.clone()),
            svg: Some(s.svg),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("scenario serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Number formatting and charts

/// Fixed 17-significant-digit formatting used by every CSV.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_csv(trace: &SimTrace) -> String {
    let n = trace.profiles.first().map_or(0, |p| p.len());
    let mut out = String::from("round");
    for i in 1..=n {
        write!(out, ",y_{i}").unwrap();
    }
    out.push_str(",welfare,running_mean\n");
    for t in 0..trace.rounds {
        write!(out, "{}", t + 1).unwrap();
        for a in trace.profiles[t].as_slice() {
            write!(out, ",{a}").unwrap();
        }
        writeln!(
            out,
            ",{},{}",
            fmt_num(trace.welfare[t]),
            fmt_num(trace.running_mean[t])
        )
        .unwrap();
    }
    out
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "axis,absolute_max_mean,absolute_max_se,relative_max_mean,relative_max_se,draws\n",
    );
    for p in &result.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.axis,
            fmt_num(p.absolute_max_mean),
            fmt_num(p.absolute_max_se),
            fmt_num(p.relative_max_mean),
            fmt_num(p.relative_max_se),
            p.draws
        )
        .unwrap();
    }
    out
}

/// Rows of a materialized strategy: state, previous profile, action distribution.
pub fn strategy_csv(solution: &ZdSolution, cfg: &GameConfig, budget: u64) -> Result<String> {
    let game = effective_game(cfg, &solution.alliance)?;
    let n_states = game.n_states()?;
    if n_states > budget {
        return Err(Error::BudgetExceeded {
            needed: n_states as u128,
            budget,
        });
    }
    let mut out = String::from("state");
    for i in 1..=cfg.n_orgs {
        write!(out, ",y_{i}").unwrap();
    }
    for a in 0..=cfg.max_rounds {
        write!(out, ",p_{a}").unwrap();
    }
    out.push('\n');
    for s in 0..n_states {
        let prev = game.expand(StateIndex(s))?;
        write!(out, "{s}").unwrap();
        for a in prev.as_slice() {
            write!(out, ",{a}").unwrap();
        }
        for p in solution.action_distribution(&prev, cfg) {
            write!(out, ",{}", fmt_num(p)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// A labelled data series for [`line_chart`].
pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

/// Minimal SVG line chart with optional horizontal reference line.
pub fn line_chart(
    title: &str,
    x_label: &str,
    xs: &[f64],
    series: &[Series<'_>],
    reference: Option<(&str, f64)>,
) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const L: f64 = 80.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

    let finite = |v: &f64| v.is_finite();
    let mut ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(finite)
        .collect();
    if let Some((_, y)) = reference {
        if y.is_finite() {
            ys.push(y);
        }
    }
    let (mut y0, mut y1) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    (y0, y1) = (y0 - pad, y1 + pad);
    let (x0, x1) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{L}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{L}" y1="{T}" x2="{L}" y2="{}" stroke="black"/>"#,
        H - B,
        W - R,
        H - B,
        H - B
    )
    .unwrap();
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{:.4}</text>"#,
            L - 6.0,
            py(y) + 4.0,
            y
        )
        .unwrap();
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            H - B + 18.0,
            trim_num(x)
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (L + W - R) / 2.0,
        H - 10.0,
        escape(x_label)
    )
    .unwrap();
    if let Some((label, y)) = reference.filter(|(_, y)| y.is_finite()) {
        writeln!(
            svg,
            r#"<line x1="{L}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="6,4"/><text x="{1}" y="{2:.2}" text-anchor="end" fill="gray">{3}</text>"#,
            py(y),
            W - R,
            py(y) - 5.0,
            escape(label)
        )
        .unwrap();
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(s.values)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            L + 10.0,
            T + 14.0 * (k as f64 + 1.0),
            escape(s.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn trim_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Debug, Parser)]
#[command(
    name = "mmzd",
    version,
    about = "Welfare-pinning strategies for the cross-silo FL participation game"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the social-dilemma condition and enumerate pure Nash equilibria.
    Dilemma(CommonArgs),
    /// Synthesize the welfare-pinning strategy of the zd block.
    Synthesize(CommonArgs),
    /// Simulate the repeated game for the roster.
    Simulate(CommonArgs),
    /// Run the configured welfare sweep.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run seed (overrides `experiment.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG charts.
    #[arg(long)]
    pub svg: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<Scenario> {
        let mut s = parse_scenario(&self.scenario)?;
        if let Some(out) = &self.out {
            s.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            s.experiment.seed = seed;
        }
        s.svg |= self.svg;
        Ok(s)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn solve(s: &Scenario) -> Result<Option<ZdSolution>> {
    let Some(z) = &s.zd else { return Ok(None) };
    let mut sol = synthesize_alliance(&s.game, &z.alliance, z.phi)
        .map_err(|e| in_block("zd", e))?
        .with_completion(z.completion);
    if let Some(a) = z.alpha0 {
        sol = sol.with_alpha0(a).map_err(|e| in_block("zd", e))?;
    }
    Ok(Some(sol))
}

fn relative(cfg: &GameConfig, welfare: f64) -> f64 {
    let full = cfg.social_welfare(&cfg.all_max_profile());
    if full > 0.0 {
        welfare / full
    } else {
        f64::NAN
    }
}

pub fn cmd_dilemma(s: &Scenario) -> Result<String> {
    let cfg = &s.game;
    let report = dilemma_condition(cfg);
    let mut out = String::new();
    for (i, ok) in report.per_org.iter().enumerate() {
        writeln!(out, "org {}: solo training unprofitable = {ok}", i + 1).unwrap();
    }
    writeln!(
        out,
        "welfare at all-zero: {}",
        report.zero_participation_welfare
    )
    .unwrap();
    writeln!(
        out,
        "welfare at all-max:  {}",
        report.full_cooperation_welfare
    )
    .unwrap();
    writeln!(
        out,
        "welfare gap:         {}",
        report.full_cooperation_welfare - report.zero_participation_welfare
    )
    .unwrap();
    writeln!(out, "social dilemma: {}", report.is_dilemma()).unwrap();
    let nash = match find_pure_nash(cfg, s.experiment.enumeration_budget) {
        Ok(ne) => {
            let listed: Vec<String> = ne.iter().map(|p| format!("{:?}", p.as_slice())).collect();
            writeln!(
                out,
                "pure Nash equilibria ({}): {}",
                ne.len(),
                listed.join(" ")
            )
            .unwrap();
            Some(ne)
        }
        Err(Error::BudgetExceeded { needed, budget }) => {
            writeln!(
                out,
                "pure Nash enumeration skipped: {needed} profiles exceed the budget of {budget}"
            )
            .unwrap();
            None
        }
        Err(e) => return Err(e),
    };
    let json = serde_json::json!({
        "per_org": report.per_org,
        "is_dilemma": report.is_dilemma(),
        "zero_participation_welfare": report.zero_participation_welfare,
        "full_cooperation_welfare": report.full_cooperation_welfare,
        "pure_nash": nash,
    });
    write_file(
        &s.output_dir,
        "dilemma.json",
        &(serde_json::to_string_pretty(&json).expect("report serializes") + "\n"),
    )?;
    Ok(out)
}

pub fn cmd_synthesize(s: &Scenario) -> Result<String> {
    let sol = solve(s)?.ok_or_else(|| scenario_err("zd", "synthesize needs a zd block"))?;
    let cfg = &s.game;
    let mut out = String::new();
    let name = if sol.alliance.len() == 1 {
        "alpha0"
    } else {
        "gamma0"
    };
    writeln!(
        out,
        "alliance: members {:?}, leader {}",
        sol.alliance
            .members()
            .iter()
            .map(|m| m + 1)
            .collect::<Vec<_>>(),
        sol.alliance.leader() + 1
    )
    .unwrap();
    writeln!(out, "phi: {}", sol.phi).unwrap();
    writeln!(
        out,
        "{name} interval: [{}, {}]",
        sol.alpha0_min, sol.alpha0_max
    )
    .unwrap();
    writeln!(out, "feasible: {}", sol.feasible).unwrap();
    write_file(
        &s.output_dir,
        "synthesis.json",
        &(serde_json::to_string_pretty(&sol).expect("solution serializes") + "\n"),
    )?;
    if !sol.feasible {
        writeln!(out, "gap: {}", sol.gap()).unwrap();
        eprint!("{out}");
        return Err(Error::Infeasible { gap: sol.gap() });
    }
    writeln!(out, "pinned {name}: {}", sol.alpha0).unwrap();
    writeln!(out, "enforced welfare: {}", sol.enforced_welfare).unwrap();
    writeln!(
        out,
        "relative maximum: {}",
        relative(cfg, sol.enforced_welfare)
    )
    .unwrap();
    match strategy_csv(&sol, cfg, s.experiment.dense_budget) {
        Ok(csv) => {
            let path = write_file(&s.output_dir, "strategy.csv", &csv)?;
            writeln!(out, "strategy table: {}", path.display()).unwrap();
        }
        Err(Error::BudgetExceeded { needed, budget }) => writeln!(
            out,
            "strategy table skipped: {needed} states exceed the dense budget of {budget}"
        )
        .unwrap(),
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn cmd_simulate(s: &Scenario) -> Result<String> {
    let cfg = &s.game;
    let sol = solve(s)?;
    let roster = Roster::from_kinds(cfg, &s.roster, sol.clone().map(Arc::new))?
        .with_prior(s.experiment.prior);
    let e = &s.experiment;
    let ens = run_ensemble(cfg, &roster, e.rounds, e.repeats, e.seed)?;
    let trace = &ens.traces[0];
    let mut out = String::new();
    let path = write_file(&s.output_dir, "trace.csv", &trace_csv(trace))?;
    writeln!(out, "trace: {}", path.display()).unwrap();
    writeln!(
        out,
        "final running mean welfare: {}",
        trace.running_mean[e.rounds - 1]
    )
    .unwrap();
    let reference = sol.as_ref().map(|z| z.welfare_bound());
    if let Some(r) = reference {
        writeln!(out, "welfare bound -alpha0_min: {r}").unwrap();
    }
    if e.repeats > 1 {
        let mut csv = String::from("round,mean_welfare,welfare_se\n");
        for t in 0..e.rounds {
            writeln!(
                csv,
                "{},{},{}",
                t + 1,
                fmt_num(ens.mean_welfare[t]),
                fmt_num(ens.std_error[t])
            )
            .unwrap();
        }
        let path = write_file(&s.output_dir, "ensemble.csv", &csv)?;
        writeln!(out, "ensemble: {}", path.display()).unwrap();
        let quarter = (e.rounds / 4).max(1);
        let (m, se) = ens.tail_statistics(quarter);
        writeln!(
            out,
            "mean welfare over last {quarter} rounds: {m} (se {se})"
        )
        .unwrap();
    }
    if s.svg {
        let xs: Vec<f64> = (1..=e.rounds).map(|t| t as f64).collect();
        let mean_label = if e.repeats > 1 {
            "ensemble mean welfare"
        } else {
            "welfare"
        };
        let mut series = vec![Series {
            label: "running mean",
            values: &trace.running_mean,
        }];
        if e.repeats > 1 {
            series.push(Series {
                label: mean_label,
                values: &ens.mean_welfare,
            });
        }
        let svg = line_chart(
            "Social welfare per round",
            "round",
            &xs,
            &series,
            reference.map(|r| ("-alpha0_min", r)),
        );
        let path = write_file(&s.output_dir, "trace.svg", &svg)?;
        writeln!(out, "chart: {}", path.display()).unwrap();
    }
    Ok(out)
}

pub fn cmd_sweep(s: &Scenario) -> Result<String> {
    let sweep = s
        .experiment
        .sweep
        .as_ref()
        .ok_or_else(|| scenario_err("experiment.sweep", "sweep needs a sweep block"))?;
    let phi =
        s.zd.as_ref()
            .map(|z| z.phi)
            .ok_or_else(|| scenario_err("zd.phi", "sweep needs a zd block for phi"))?;
    let seed = s.experiment.seed;
    let result = match sweep {
        SweepSettings::AllianceSize { sizes, draws, draw } => {
            sweep_alliance_size(&s.game, sizes, phi, *draws, seed, *draw)?
        }
        SweepSettings::Population {
            n_values,
            alliance,
            outer,
            inner,
            pool,
            pool_seed,
            sampler,
        } => {
            let params = GameParams {
                local_iters: s.game.local_iters,
                max_rounds: s.game.max_rounds,
                theta0: s.game.theta0,
                theta1: s.game.theta1,
            };
            let generator = PopulationGenerator::sample(params, sampler, *pool, *pool_seed)?;
            sweep_population(&generator, n_values, *alliance, *outer, *inner, phi, seed)?
        }
    };
    let mut out = String::new();
    let path = write_file(&s.output_dir, "sweep.csv", &sweep_csv(&result))?;
    writeln!(out, "sweep: {}", path.display()).unwrap();
    for p in &result.points {
        writeln!(
            out,
            "{} = {}: absolute max {} (se {}), relative max {} (se {}), feasible {:.3}",
            result.axis_name,
            p.axis,
            p.absolute_max_mean,
            p.absolute_max_se,
            p.relative_max_mean,
            p.relative_max_se,
            p.feasible_fraction
        )
        .unwrap();
    }
    if s.svg {
        let xs: Vec<f64> = result.points.iter().map(|p| p.axis).collect();
        let abs: Vec<f64> = result.points.iter().map(|p| p.absolute_max_mean).collect();
        let rel: Vec<f64> = result.points.iter().map(|p| p.relative_max_mean).collect();
        let a = line_chart(
            "Absolute maximum of social welfare",
            &result.axis_name,
            &xs,
            &[Series {
                label: "absolute max",
                values: &abs,
            }],
            None,
        );
        let r = line_chart(
            "Relative maximum of social welfare",
            &result.axis_name,
            &xs,
            &[Series {
                label: "relative max",
                values: &rel,
            }],
            None,
        );
        write_file(&s.output_dir, "sweep_absolute.svg", &a)?;
        write_file(&s.output_dir, "sweep_relative.svg", &r)?;
        writeln!(out, "charts: sweep_absolute.svg, sweep_relative.svg").unwrap();
    }
    Ok(out)
}

/// Runs one command, writing the normalized scenario first.
pub fn execute(command: &Command) -> Result<String> {
    let (args, run): (&CommonArgs, fn(&Scenario) -> Result<String>) = match command {
        Command::Dilemma(a) => (a, cmd_dilemma),
        Command::Synthesize(a) => (a, cmd_synthesize),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Sweep(a) => (a, cmd_sweep),
    };
    let scenario = args.load()?;
    write_file(
        &scenario.output_dir,
        "scenario.json",
        &dump_scenario(&scenario),
    )?;
    run(&scenario)
}

/// Entry point for the `mmzd` binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            print!("{report}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
