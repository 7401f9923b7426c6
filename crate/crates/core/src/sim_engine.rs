//! Repeated-game simulation, seeded ensembles and the welfare sweeps.

use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{dilemma_condition, ActionProfile, GameConfig, OrgProfile};
use crate::rng::{self, SimRng};
use crate::strategies::{
    first_round_action, next_action, synthetic_prior, AgentKind, AgentSpec, Behavior,
    FirstRoundPrior,
};
use crate::zd_synthesis::{synthesize_alliance, AllianceSpec, ZdSolution};

/// One agent per organization, plus the round-1 prior.
#[derive(Debug, Clone)]
pub struct Roster {
    agents: Vec<AgentSpec>,
    /// Organizations moving together; alliances form one actor.
    actors: Vec<Vec<usize>>,
    pub prior: FirstRoundPrior,
}

impl Roster {
    pub fn new(cfg: &GameConfig, agents: Vec<AgentSpec>) -> Result<Self> {
        if agents.len() != cfg.n_orgs {
            return Err(Error::Roster(format!(
                "roster has {} agents for {} organizations",
                agents.len(),
                cfg.n_orgs
            )));
        }
        if let Some((i, a)) = agents.iter().enumerate().find(|(i, a)| a.org != *i) {
            return Err(Error::Roster(format!(
                "agent at position {i} is bound to organization {}",
                a.org
            )));
        }
        let mut actors: Vec<Vec<usize>> = Vec::new();
        let mut assigned = vec![false; cfg.n_orgs];
        for (i, a) in agents.iter().enumerate() {
            if assigned[i] {
                continue;
            }
            match &a.behavior {
                Behavior::Mmzda(sol) => {
                    let members = sol.alliance.members().to_vec();
                    for &m in &members {
                        let same =
                            matches!(&agents[m].behavior, Behavior::Mmzda(s) if **s == **sol);
                        if !same {
                            return Err(Error::Roster(format!(
                                "alliance member {m} does not play the shared MMZDA solution"
                            )));
                        }
                        assigned[m] = true;
                    }
                    actors.push(members);
                }
                _ => {
                    assigned[i] = true;
                    actors.push(vec![i]);
                }
            }
        }
        Ok(Self {
            agents,
            actors,
            prior: FirstRoundPrior::default(),
        })
    }

    /// Roster from strategy names; ZD kinds use `solution`, whose alliance
    /// must match the organizations labelled MMZD / MMZDA.
    pub fn from_kinds(
        cfg: &GameConfig,
        kinds: &[AgentKind],
        solution: Option<Arc<ZdSolution>>,
    ) -> Result<Self> {
        let agents = kinds
            .iter()
            .enumerate()
            .map(|(i, &k)| match k {
                AgentKind::Mmzd | AgentKind::Mmzda => {
                    let sol = solution.clone().ok_or_else(|| {
                        Error::Roster(format!("organization {i}: {k} needs a zd block"))
                    })?;
                    let expected = if sol.alliance.len() == 1 {
                        AgentKind::Mmzd
                    } else {
                        AgentKind::Mmzda
                    };
                    if k != expected {
                        return Err(Error::Roster(format!(
                            "organization {i} is labelled {k} but the zd block describes {expected}"
                        )));
                    }
                    AgentSpec::zd(i, sol)
                }
                _ => AgentSpec::basic(k, i),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(sol) = &solution {
            if let Some(&m) = sol.alliance.members().iter().find(|&&m| {
                m >= kinds.len() || !matches!(kinds[m], AgentKind::Mmzd | AgentKind::Mmzda)
            }) {
                return Err(Error::Roster(format!(
                    "organization {m} belongs to the ZD alliance but is not labelled MMZD/MMZDA"
                )));
            }
        }
        Self::new(cfg, agents)
    }

    pub fn with_prior(mut self, prior: FirstRoundPrior) -> Self {
        self.prior = prior;
        self
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    /// Whether every agent acts deterministically.
    pub fn is_deterministic(&self) -> bool {
        self.agents
            .iter()
            .all(|a| matches!(a.behavior, Behavior::Alld | Behavior::Allc))
    }
}

/// Per-round record of one repeated game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub rounds: usize,
    pub profiles: Vec<ActionProfile>,
    pub welfare: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub per_org_utility: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SimTrace {
    /// Mean welfare over the last `k` rounds.
    pub fn tail_mean(&self, k: usize) -> f64 {
        let k = k.min(self.rounds).max(1);
        self.welfare[self.rounds - k..].iter().sum::<f64>() / k as f64
    }
}

pub fn run_game(cfg: &GameConfig, roster: &Roster, n_rounds: usize, seed: u64) -> Result<SimTrace> {
    if roster.agents.len() != cfg.n_orgs {
        return Err(Error::Roster("roster size does not match the game".into()));
    }
    let mut agents = roster.agents.clone();
    let mut rngs: Vec<SimRng> = (0..roster.actors.len())
        .map(|a| rng::actor_stream(seed, a))
        .collect();
    for (a, orgs) in roster.actors.iter().enumerate() {
        for &o in orgs {
            agents[o].resolve_mixed(&mut rngs[a]);
        }
    }
    let mut prior_rng = rng::stream(seed, rng::PRIOR_STREAM);
    let mut prev = synthetic_prior(roster.prior, cfg, &mut prior_rng);

    let mut trace = SimTrace {
        rounds: n_rounds,
        profiles: Vec::with_capacity(n_rounds),
        welfare: Vec::with_capacity(n_rounds),
        running_mean: Vec::with_capacity(n_rounds),
        per_org_utility: Vec::with_capacity(n_rounds),
        seed,
    };
    let mut cumulative = 0.0;
    for t in 0..n_rounds {
        let mut y = vec![0u32; cfg.n_orgs];
        for (a, orgs) in roster.actors.iter().enumerate() {
            let lead = &agents[orgs[0]];
            let act = if t == 0 {
                first_round_action(lead, &prev, cfg, &mut rngs[a])?
            } else {
                next_action(lead, &prev, cfg, &mut rngs[a])?
            };
            for &o in orgs {
                y[o] = act;
            }
        }
        let profile = ActionProfile::new(y, cfg)?;
        let w = cfg.social_welfare(&profile);
        cumulative += w;
        trace.welfare.push(w);
        trace.running_mean.push(cumulative / (t + 1) as f64);
        trace
            .per_org_utility
            .push((0..cfg.n_orgs).map(|i| cfg.utility(i, &profile)).collect());
        trace.profiles.push(profile.clone());
        prev = profile;
    }
    Ok(trace)
}

/// Per-round welfare statistics across independent repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub mean_welfare: Vec<f64>,
    pub std_error: Vec<f64>,
    pub traces: Vec<SimTrace>,
}

impl Ensemble {
    /// Mean and standard error, across repeats, of each repeat's mean over its
    /// last `k` rounds.
    pub fn tail_statistics(&self, k: usize) -> (f64, f64) {
        let tails: Vec<f64> = self.traces.iter().map(|t| t.tail_mean(k)).collect();
        mean_and_se(&tails)
    }
}

/// Runs `n_repeats` games with seeds `base_seed + k`.
pub fn run_ensemble(
    cfg: &GameConfig,
    roster: &Roster,
    n_rounds: usize,
    n_repeats: usize,
    base_seed: u64,
) -> Result<Ensemble> {
    if n_repeats == 0 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    let traces = (0..n_repeats as u64)
        .into_par_iter()
        .map(|k| run_game(cfg, roster, n_rounds, rng::repeat_seed(base_seed, k)))
        .collect::<Result<Vec<_>>>()?;
    let mut mean_welfare = Vec::with_capacity(n_rounds);
    let mut std_error = Vec::with_capacity(n_rounds);
    for t in 0..n_rounds {
        let column: Vec<f64> = traces.iter().map(|tr| tr.welfare[t]).collect();
        let (m, se) = mean_and_se(&column);
        mean_welfare.push(m);
        std_error.push(se);
    }
    Ok(Ensemble {
        mean_welfare,
        std_error,
        traces,
    })
}

/// Sample mean and standard error (zero for a single sample).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: f64,
    pub absolute_max_mean: f64,
    pub absolute_max_se: f64,
    pub relative_max_mean: f64,
    pub relative_max_se: f64,
    pub draws: usize,
    /// Share of draws whose pinning interval is non-empty.
    pub feasible_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub points: Vec<SweepPoint>,
}

/// How alliances are drawn in an alliance-size sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AllianceDraw {
    /// Fresh random members and leader for every draw.
    Random,
    /// Fixed leader; larger alliances extend smaller ones along one random
    /// ordering of the other organizations per draw.
    Nested { leader: usize },
}

/// Welfare bound `-alpha0_min` and its ratio to full-cooperation welfare.
fn measure(cfg: &GameConfig, alliance: &AllianceSpec, phi: f64) -> Result<(f64, f64, bool)> {
    let sol = synthesize_alliance(cfg, alliance, phi)?;
    let abs = sol.welfare_bound();
    let full = cfg.social_welfare(&cfg.all_max_profile());
    let rel = if full > 0.0 { abs / full } else { f64::NAN };
    Ok((abs, rel, sol.feasible))
}

fn summarize(axis: f64, samples: &[(f64, f64, bool)]) -> SweepPoint {
    let abs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let rel: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (am, ase) = mean_and_se(&abs);
    let (rm, rse) = mean_and_se(&rel);
    SweepPoint {
        axis,
        absolute_max_mean: am,
        absolute_max_se: ase,
        relative_max_mean: rm,
        relative_max_se: rse,
        draws: samples.len(),
        feasible_fraction: samples.iter().filter(|s| s.2).count() as f64 / samples.len() as f64,
    }
}

fn random_alliance<R: Rng + ?Sized>(
    n: usize,
    size: usize,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<AllianceSpec> {
    let members = index::sample(rng, n, size).into_vec();
    let leader = members[rng.random_range(0..members.len())];
    AllianceSpec::new(members, leader, cfg)
}

/// Welfare bound as a function of alliance size.
pub fn sweep_alliance_size(
    cfg: &GameConfig,
    sizes: &[usize],
    phi: f64,
    n_draws: usize,
    seed: u64,
    draw: AllianceDraw,
) -> Result<SweepResult> {
    if sizes.is_empty() {
        return Err(Error::param("sizes", "sweep axis is empty"));
    }
    if n_draws == 0 {
        return Err(Error::param("draws", "must be at least 1"));
    }
    let n = cfg.n_orgs;
    if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::param(
            "sizes",
            format!("alliance size {s} outside 1..={n}"),
        ));
    }
    if let AllianceDraw::Nested { leader } = draw {
        if leader >= n {
            return Err(Error::param(
                "leader",
                format!("{leader} is not below N = {n}"),
            ));
        }
    }
    let points = sizes
        .par_iter()
        .map(|&size| {
            let samples = (0..n_draws as u64)
                .map(|d| {
                    let alliance = match draw {
                        AllianceDraw::Random => {
                            let mut g = rng::stream(rng::repeat_seed(seed, d), size as u64);
                            random_alliance(n, size, cfg, &mut g)?
                        }
                        AllianceDraw::Nested { leader } => {
                            let mut g = rng::stream(rng::repeat_seed(seed, d), 0);
                            let mut others: Vec<usize> = (0..n).filter(|&i| i != leader).collect();
                            others.shuffle(&mut g);
                            let mut members = vec![leader];
                            members.extend_from_slice(&others[..size - 1]);
                            AllianceSpec::new(members, leader, cfg)?
                        }
                    };
                    measure(cfg, &alliance, phi)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(size as f64, &samples))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: "alliance_size".into(),
        points,
    })
}

/// Ranges for randomly generated organizations.
///
/// `iter_cost` is drawn as `margin * m_i * gain(1) / K`, where
/// `m_i * gain(1) / K` is the smallest cost at which solo training is
/// unprofitable at every level (solo gain per round is largest at `y = 1`).
/// Draws failing the dilemma check are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrgSampler {
    pub unit_revenue: (f64, f64),
    pub comm_cost: (f64, f64),
    pub cost_margin: (f64, f64),
}

impl Default for OrgSampler {
    fn default() -> Self {
        Self {
            unit_revenue: (1.0, 5.0),
            comm_cost: (0.01, 0.1),
            cost_margin: (1.0, 1.5),
        }
    }
}

/// Global parameters shared by generated games.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    pub local_iters: u32,
    pub max_rounds: u32,
    pub theta0: f64,
    pub theta1: f64,
}

impl GameParams {
    /// `K = 200, r = 33, theta0 = 23271.584, theta1 = 50193.243`.
    pub fn large_scale() -> Self {
        Self {
            local_iters: 200,
            max_rounds: 33,
            theta0: 23271.584,
            theta1: 50193.243,
        }
    }

    pub fn game(&self, orgs: Vec<OrgProfile>) -> Result<GameConfig> {
        GameConfig::new(
            self.local_iters,
            self.max_rounds,
            self.theta0,
            self.theta1,
            orgs,
        )
    }
}

const MAX_REJECTIONS: usize = 10_000;

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl OrgSampler {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("unit_revenue", self.unit_revenue),
            ("comm_cost", self.comm_cost),
            ("cost_margin", self.cost_margin),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0) {
                return Err(Error::param(
                    format!("sampler.{name}"),
                    "needs finite bounds with 0 <= lo <= hi",
                ));
            }
        }
        if self.unit_revenue.0 <= 0.0 {
            return Err(Error::param(
                "sampler.unit_revenue",
                "lower bound must be positive",
            ));
        }
        Ok(())
    }

    /// One organization satisfying the solo-training dilemma condition.
    pub fn sample_org<R: Rng + ?Sized>(
        &self,
        params: &GameParams,
        rng: &mut R,
    ) -> Result<OrgProfile> {
        let probe = params.game(vec![OrgProfile::new(1.0, 1.0, 0.0); 2])?;
        let k = params.local_iters as f64;
        for _ in 0..MAX_REJECTIONS {
            let m = uniform(rng, self.unit_revenue);
            let c = uniform(rng, self.comm_cost);
            let beta = uniform(rng, self.cost_margin) * m * probe.precision_gain(1) / k;
            let mut one = probe.clone();
            one.orgs[0] = OrgProfile::new(m, beta, c);
            if dilemma_condition(&one).per_org[0] {
                return Ok(one.orgs[0]);
            }
        }
        Err(Error::param(
            "sampler",
            "could not draw an organization in a dilemma",
        ))
    }

    /// A game of `n` sampled organizations in which full cooperation pays off.
    pub fn sample_game<R: Rng + ?Sized>(
        &self,
        params: &GameParams,
        n: usize,
        rng: &mut R,
    ) -> Result<GameConfig> {
        for _ in 0..MAX_REJECTIONS / 10 {
            let orgs = (0..n)
                .map(|_| self.sample_org(params, rng))
                .collect::<Result<Vec<_>>>()?;
            let cfg = params.game(orgs)?;
            if dilemma_condition(&cfg).is_dilemma() {
                return Ok(cfg);
            }
        }
        Err(Error::param(
            "sampler",
            format!("no sampled {n}-organization game has positive full-cooperation welfare"),
        ))
    }
}

/// Alliance size rule for population sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllianceSize {
    Fixed(usize),
    /// `round(ratio * N)`, at least one.
    Ratio(f64),
}

impl AllianceSize {
    pub fn for_population(self, n: usize) -> Result<usize> {
        let k = match self {
            AllianceSize::Fixed(k) => k,
            AllianceSize::Ratio(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::param("ratio", "must lie in (0, 1]"));
                }
                ((f * n as f64).round() as usize).max(1)
            }
        };
        if k == 0 || k > n {
            return Err(Error::param(
                "alliance_size",
                format!("{k} members do not fit {n} organizations"),
            ));
        }
        Ok(k)
    }
}

/// Draws games of `N` organizations from a shared pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGenerator {
    pub params: GameParams,
    pub pool: Vec<OrgProfile>,
}

impl PopulationGenerator {
    pub fn sample(
        params: GameParams,
        sampler: &OrgSampler,
        pool_size: usize,
        seed: u64,
    ) -> Result<Self> {
        sampler.validate()?;
        let mut g = rng::stream(seed, u64::MAX);
        let pool = (0..pool_size)
            .map(|_| sampler.sample_org(&params, &mut g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, pool })
    }

    /// Random `n`-subset of the pool whose full-cooperation welfare is positive.
    pub fn select<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<GameConfig> {
        if n > self.pool.len() {
            return Err(Error::param(
                "n_values",
                format!("population {n} exceeds pool of {}", self.pool.len()),
            ));
        }
        for _ in 0..1000 {
            let picks = index::sample(rng, self.pool.len(), n).into_vec();
            let cfg = self
                .params
                .game(picks.iter().map(|&i| self.pool[i]).collect())?;
            if dilemma_condition(&cfg).is_dilemma() {
                return Ok(cfg);
            }
        }
        Err(Error::param(
            "population",
            format!("no {n}-subset of the pool has positive full-cooperation welfare"),
        ))
    }
}

/// Welfare bound as a function of population size with nested resampling:
/// `n_outer` organization subsets, each with `n_inner` random alliances.
pub fn sweep_population(
    generator: &PopulationGenerator,
    n_values: &[usize],
    size: AllianceSize,
    n_outer: usize,
    n_inner: usize,
    phi: f64,
    seed: u64,
) -> Result<SweepResult> {
    if n_values.is_empty() {
        return Err(Error::param("n_values", "sweep axis is empty"));
    }
    if n_outer == 0 || n_inner == 0 {
        return Err(Error::param("outer/inner", "must be at least 1"));
    }
    let points = n_values
        .par_iter()
        .map(|&n| {
            let k = size.for_population(n)?;
            let mut samples = Vec::with_capacity(n_outer * n_inner);
            for o in 0..n_outer as u64 {
                let mut g = rng::stream(rng::repeat_seed(seed, o), n as u64);
                let cfg = generator.select(n, &mut g)?;
                for _ in 0..n_inner {
                    let alliance = random_alliance(n, k, &cfg, &mut g)?;
                    samples.push(measure(&cfg, &alliance, phi)?);
                }
            }
            Ok(summarize(n as f64, &samples))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: "n_orgs".into(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::fixtures::*;

    fn roster(cfg: &GameConfig, kinds: &[AgentKind]) -> Roster {
        Roster::from_kinds(cfg, kinds, None).unwrap()
    }

    #[test]
    fn all_alld_sits_at_equilibrium() {
        let cfg = dilemma4();
        let t = run_game(&cfg, &roster(&cfg, &[AgentKind::Alld; 4]), 30, 1).unwrap();
        assert!(t.welfare.iter().all(|&w| (w + 0.2).abs() < 1e-15));
    }

    #[test]
    fn all_allc_is_full_cooperation() {
        let cfg = dilemma4();
        let full = cfg.social_welfare(&cfg.all_max_profile());
        let t = run_game(&cfg, &roster(&cfg, &[AgentKind::Allc; 4]), 30, 1).unwrap();
        assert!(t.welfare.iter().all(|&w| w == full));
        let e = run_ensemble(&cfg, &roster(&cfg, &[AgentKind::Allc; 4]), 10, 5, 7).unwrap();
        assert!(e.std_error.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let cfg = dilemma4();
        let r = roster(
            &cfg,
            &[
                AgentKind::Rand,
                AgentKind::Tft,
                AgentKind::Mixed,
                AgentKind::Rand,
            ],
        );
        let a = run_game(&cfg, &r, 200, 42).unwrap();
        let b = run_game(&cfg, &r, 200, 42).unwrap();
        assert_eq!(a, b);
        let c = run_game(&cfg, &r, 200, 43).unwrap();
        assert_ne!(a.profiles, c.profiles);
    }

    #[test]
    fn running_mean_matches_prefix_means() {
        let cfg = dilemma4();
        let r = roster(&cfg, &[AgentKind::Rand; 4]);
        let t = run_game(&cfg, &r, 300, 9).unwrap();
        for k in 0..t.rounds {
            let m = t.welfare[..=k].iter().sum::<f64>() / (k + 1) as f64;
            assert!((t.running_mean[k] - m).abs() <= 1e-12 * m.abs().max(1.0));
        }
    }

    #[test]
    fn single_repeat_ensemble_is_one_game() {
        let cfg = dilemma4();
        let r = roster(&cfg, &[AgentKind::Rand; 4]);
        let e = run_ensemble(&cfg, &r, 50, 1, 77).unwrap();
        let t = run_game(&cfg, &r, 50, 77).unwrap();
        assert_eq!(e.mean_welfare, t.welfare);
        assert!(e.std_error.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn roster_errors() {
        let cfg = dilemma4();
        assert!(Roster::from_kinds(&cfg, &[AgentKind::Alld; 3], None).is_err());
        assert!(Roster::from_kinds(
            &cfg,
            &[
                AgentKind::Mmzd,
                AgentKind::Alld,
                AgentKind::Alld,
                AgentKind::Alld
            ],
            None
        )
        .is_err());
    }

    #[test]
    fn nested_alliance_sweep_on_dilemma4_is_monotone() {
        let cfg = dilemma4();
        let s = sweep_alliance_size(
            &cfg,
            &[1, 2, 3, 4],
            0.01,
            5,
            3,
            AllianceDraw::Nested { leader: 0 },
        )
        .unwrap();
        for w in s.points.windows(2) {
            assert!(w[1].absolute_max_mean >= w[0].absolute_max_mean);
        }
        let r = sweep_alliance_size(&cfg, &[1, 2, 3, 4], 0.01, 8, 3, AllianceDraw::Random).unwrap();
        for w in r.points.windows(2) {
            assert!(w[1].absolute_max_mean >= w[0].absolute_max_mean);
        }
        assert!(sweep_alliance_size(&cfg, &[], 0.01, 5, 3, AllianceDraw::Random).is_err());
        assert!(sweep_alliance_size(&cfg, &[5], 0.01, 5, 3, AllianceDraw::Random).is_err());
    }

    #[test]
    fn sampled_orgs_are_in_dilemma() {
        let params = GameParams::large_scale();
        let mut g = rng::stream(1, 1);
        let cfg = OrgSampler::default()
            .sample_game(&params, 10, &mut g)
            .unwrap();
        assert!(dilemma_condition(&cfg).is_dilemma());
    }

    #[test]
    fn alliance_size_rules() {
        assert_eq!(
            AllianceSize::Ratio(1.0 / 3.0).for_population(10).unwrap(),
            3
        );
        assert_eq!(AllianceSize::Ratio(0.01).for_population(10).unwrap(), 1);
        assert!(AllianceSize::Fixed(4).for_population(3).is_err());
        assert!(AllianceSize::Ratio(0.0).for_population(3).is_err());
    }
}
