//! Welfare-maximizing ZD pinning for a single organization or an alliance.
//!
//! The ZD player constrains its probability of playing action 0 so that
//! `p_hat_j = p_{j,0} - [own previous action = 0] = phi (W_j + alpha0)`,
//! which fixes stationary welfare at `-alpha0` whatever the others do. Each
//! state yields one lower and one upper bound on `alpha0` from
//! `0 <= p_{j,0} <= 1`; the smallest feasible `alpha0` gives the largest
//! enforceable welfare.
//!
//! An alliance acts as one player whose action is copied by every member, so
//! the same construction runs over the reduced game of outsiders plus leader.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{ActionProfile, GameConfig};
use crate::state_space::{block_welfare_range, decode_digits, encode_digits, StateIndex};
use crate::zd_core::{self, ConditionalStrategy, PinningReport, TransitionMatrix, PROB_TOL};

/// How the probability mass not pinned to action 0 is spread over `1..=r`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionPolicy {
    #[default]
    Uniform,
    AllOnMax,
}

impl CompletionPolicy {
    /// Full action distribution given the pinned probability of action 0.
    pub fn distribution(self, p0: f64, r: u32) -> Vec<f64> {
        let mut row = vec![0.0; r as usize + 1];
        row[0] = p0;
        let rest = 1.0 - p0;
        match self {
            CompletionPolicy::Uniform => {
                let share = rest / r as f64;
                row[1..].iter_mut().for_each(|x| *x = share);
            }
            CompletionPolicy::AllOnMax => row[r as usize] = rest,
        }
        row
    }
}

/// Organizations acting as one ZD player through `leader`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllianceSpec {
    members: Vec<usize>,
    leader: usize,
}

impl AllianceSpec {
    pub fn new(mut members: Vec<usize>, leader: usize, cfg: &GameConfig) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::param("alliance.members", "must not be empty"));
        }
        if let Some(&m) = members.iter().find(|&&m| m >= cfg.n_orgs) {
            return Err(Error::param(
                "alliance.members",
                format!("{m} is not below N = {}", cfg.n_orgs),
            ));
        }
        if !members.contains(&leader) {
            return Err(Error::param(
                "alliance.leader",
                format!("leader {leader} is not a member"),
            ));
        }
        Ok(Self { members, leader })
    }

    pub fn singleton(org: usize, cfg: &GameConfig) -> Result<Self> {
        Self::new(vec![org], org, cfg)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, org: usize) -> bool {
        self.members.binary_search(&org).is_ok()
    }
}

/// A synthesized welfare pinning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZdSolution {
    pub phi: f64,
    /// Smallest `alpha0` (or `gamma0` for alliances) allowed by `p >= 0` / `p <= 1`.
    pub alpha0_min: f64,
    pub alpha0_max: f64,
    pub feasible: bool,
    /// The constant actually pinned; `alpha0_min` unless overridden.
    pub alpha0: f64,
    /// `-alpha0`.
    pub enforced_welfare: f64,
    pub alliance: AllianceSpec,
    pub completion: CompletionPolicy,
}

impl ZdSolution {
    fn from_bounds(phi: f64, lo: f64, hi: f64, alliance: AllianceSpec) -> Self {
        Self {
            phi,
            alpha0_min: lo,
            alpha0_max: hi,
            feasible: lo <= hi,
            alpha0: lo,
            enforced_welfare: -lo,
            alliance,
            completion: CompletionPolicy::default(),
        }
    }

    /// `alpha0_min - alpha0_max`; positive when infeasible.
    pub fn gap(&self) -> f64 {
        self.alpha0_min - self.alpha0_max
    }

    /// Largest welfare the candidate bound allows, `-alpha0_min`, whether or
    /// not the interval is feasible.
    pub fn welfare_bound(&self) -> f64 {
        -self.alpha0_min
    }

    pub fn reference_org(&self) -> usize {
        self.alliance.leader
    }

    /// Pins a different constant inside the feasible interval.
    pub fn with_alpha0(mut self, alpha0: f64) -> Result<Self> {
        if !self.feasible {
            return Err(Error::Infeasible { gap: self.gap() });
        }
        if !(alpha0 >= self.alpha0_min && alpha0 <= self.alpha0_max) {
            return Err(Error::param(
                "alpha0",
                format!(
                    "{alpha0} outside feasible interval [{}, {}]",
                    self.alpha0_min, self.alpha0_max
                ),
            ));
        }
        self.alpha0 = alpha0;
        self.enforced_welfare = -alpha0;
        Ok(self)
    }

    pub fn with_completion(mut self, completion: CompletionPolicy) -> Self {
        self.completion = completion;
        self
    }

    /// Probability of playing 0 after the full previous profile `prev`:
    /// `[prev_leader = 0] + phi (W(prev) + alpha0)`.
    ///
    /// Not clamped; callers must reject infeasible solutions.
    pub fn pinned_probability(&self, prev: &ActionProfile, cfg: &GameConfig) -> f64 {
        let indicator = if prev.get(self.alliance.leader) == 0 {
            1.0
        } else {
            0.0
        };
        indicator + self.phi * (cfg.social_welfare(prev) + self.alpha0)
    }

    pub fn action_distribution(&self, prev: &ActionProfile, cfg: &GameConfig) -> Vec<f64> {
        self.completion
            .distribution(self.pinned_probability(prev, cfg), cfg.max_rounds)
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi == 0.0 || !phi.is_finite() {
        return Err(Error::param("phi", "must be finite and non-zero"));
    }
    Ok(())
}

/// Lower and upper `alpha0` bounds contributed by one state of welfare `w`.
fn state_bounds(w: f64, indicator: bool, phi: f64) -> (f64, f64) {
    let inv = 1.0 / phi;
    match (phi > 0.0, indicator) {
        (true, true) => (-w - inv, -w),
        (true, false) => (-w, -w + inv),
        (false, true) => (-w, -w - inv),
        (false, false) => (-w + inv, -w),
    }
}

/// Candidate bounds enumerated state by state.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Full-game profile behind each entry.
    pub profiles: Vec<ActionProfile>,
}

impl Candidates {
    pub fn alpha0_min(&self) -> f64 {
        self.lower.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn alpha0_max(&self) -> f64 {
        self.upper.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One candidate pair per state of the full game, in state order.
pub fn candidates_individual(
    cfg: &GameConfig,
    org: usize,
    phi: f64,
    budget: u64,
) -> Result<Candidates> {
    candidates_alliance(cfg, &AllianceSpec::singleton(org, cfg)?, phi, budget)
}

/// One candidate pair per state of the alliance's reduced game, in state order.
pub fn candidates_alliance(
    cfg: &GameConfig,
    alliance: &AllianceSpec,
    phi: f64,
    budget: u64,
) -> Result<Candidates> {
    check_phi(phi)?;
    let game = effective_game(cfg, alliance)?;
    let n = game.n_states()?;
    if n > budget {
        return Err(Error::BudgetExceeded {
            needed: n as u128,
            budget,
        });
    }
    let mut out = Candidates {
        lower: Vec::with_capacity(n as usize),
        upper: Vec::with_capacity(n as usize),
        profiles: Vec::with_capacity(n as usize),
    };
    for s in 0..n {
        let y = game.expand(StateIndex(s))?;
        let w = cfg.social_welfare(&y);
        let (lo, hi) = state_bounds(w, y.get(alliance.leader) == 0, phi);
        out.lower.push(lo);
        out.upper.push(hi);
        out.profiles.push(y);
    }
    Ok(out)
}

pub fn synthesize_individual(cfg: &GameConfig, org: usize, phi: f64) -> Result<ZdSolution> {
    synthesize_alliance(cfg, &AllianceSpec::singleton(org, cfg)?, phi)
}

/// Optimal pinning for an alliance, from welfare extrema of the reduced game.
pub fn synthesize_alliance(
    cfg: &GameConfig,
    alliance: &AllianceSpec,
    phi: f64,
) -> Result<ZdSolution> {
    check_phi(phi)?;
    let members = alliance.members();
    let ind = block_welfare_range(cfg, members, 0..=0);
    let non = block_welfare_range(cfg, members, 1..=cfg.max_rounds);
    let inv = 1.0 / phi;
    let (lo, hi) = if phi > 0.0 {
        (
            f64::max(-ind.min - inv, -non.min),
            f64::min(-ind.max, -non.max + inv),
        )
    } else {
        (
            f64::max(-ind.min, -non.min + inv),
            f64::min(-ind.max - inv, -non.max),
        )
    };
    Ok(ZdSolution::from_bounds(phi, lo, hi, alliance.clone()))
}

/// Feasibility of individual pinning across a grid of `phi` values.
pub fn phi_sweep(
    cfg: &GameConfig,
    alliance: &AllianceSpec,
    phis: &[f64],
) -> Result<Vec<ZdSolution>> {
    phis.iter()
        .map(|&phi| synthesize_alliance(cfg, alliance, phi))
        .collect()
}

/// Reduced game in which the alliance is a single player.
///
/// Players are the outsiders plus the leader, in organization order; an
/// effective state is a base-`(r+1)` number over those players.
/// Strategy of a non-member given the previous full profile.
pub type OutsiderRule<'a> = &'a dyn Fn(&ActionProfile) -> Vec<f64>;

#[derive(Debug, Clone)]
pub struct EffectiveGame<'a> {
    cfg: &'a GameConfig,
    alliance: AllianceSpec,
    players: Vec<usize>,
}

pub fn effective_game<'a>(
    cfg: &'a GameConfig,
    alliance: &AllianceSpec,
) -> Result<EffectiveGame<'a>> {
    if let Some(&m) = alliance.members.iter().find(|&&m| m >= cfg.n_orgs) {
        return Err(Error::param(
            "alliance.members",
            format!("{m} is not below N"),
        ));
    }
    let players = (0..cfg.n_orgs)
        .filter(|&i| i == alliance.leader || !alliance.contains(i))
        .collect();
    Ok(EffectiveGame {
        cfg,
        alliance: alliance.clone(),
        players,
    })
}

impl EffectiveGame<'_> {
    pub fn players(&self) -> &[usize] {
        &self.players
    }

    /// Position of the leader among the players.
    pub fn leader_slot(&self) -> usize {
        self.players
            .iter()
            .position(|&p| p == self.alliance.leader)
            .expect("leader is a player")
    }

    pub fn n_states(&self) -> Result<u64> {
        (self.cfg.n_actions() as u64)
            .checked_pow(self.players.len() as u32)
            .ok_or(Error::BudgetExceeded {
                needed: u128::MAX,
                budget: u64::MAX,
            })
    }

    /// Full profile with the leader's action copied to every member.
    pub fn expand(&self, state: StateIndex) -> Result<ActionProfile> {
        let size = self.n_states()?;
        if state.0 >= size {
            return Err(Error::IndexOutOfRange {
                index: state.0,
                size,
            });
        }
        let digits = decode_digits(state.0, self.players.len(), self.cfg.n_actions() as u64);
        Ok(self.expand_digits(&digits))
    }

    fn expand_digits(&self, digits: &[u32]) -> ActionProfile {
        let mut y = vec![0u32; self.cfg.n_orgs];
        for (&p, &a) in self.players.iter().zip(digits) {
            y[p] = a;
        }
        let lead = y[self.alliance.leader];
        for &m in &self.alliance.members {
            y[m] = lead;
        }
        ActionProfile::from_raw(y)
    }

    /// Effective state of a full profile, if all members agree.
    pub fn contract(&self, profile: &ActionProfile) -> Option<StateIndex> {
        let lead = profile.get(self.alliance.leader);
        if self
            .alliance
            .members
            .iter()
            .any(|&m| profile.get(m) != lead)
        {
            return None;
        }
        let digits: Vec<u32> = self.players.iter().map(|&p| profile.get(p)).collect();
        Some(encode_digits(&digits, self.cfg.n_actions() as u64))
    }

    /// Player utilities `v^x`; the leader receives the alliance's total.
    pub fn player_utilities(&self, state: StateIndex) -> Result<Vec<f64>> {
        let y = self.expand(state)?;
        Ok(self
            .players
            .iter()
            .map(|&p| {
                if p == self.alliance.leader {
                    self.alliance
                        .members
                        .iter()
                        .map(|&m| self.cfg.utility(m, &y))
                        .sum()
                } else {
                    self.cfg.utility(p, &y)
                }
            })
            .collect())
    }

    pub fn welfare(&self, state: StateIndex) -> Result<f64> {
        Ok(self.cfg.social_welfare(&self.expand(state)?))
    }

    /// Exact stationary check of an alliance pinning against the outsiders'
    /// strategies, each given as a rule over the previous full profile.
    pub fn verify_pinning(
        &self,
        solution: &ZdSolution,
        outsiders: &[OutsiderRule<'_>],
        budget: u64,
    ) -> Result<PinningReport> {
        let n = self.n_states()?;
        if n > budget {
            return Err(Error::BudgetExceeded {
                needed: n as u128,
                budget,
            });
        }
        if outsiders.len() + 1 != self.players.len() {
            return Err(Error::param(
                "outsiders",
                format!("expected {} strategies", self.players.len() - 1),
            ));
        }
        let k = self.cfg.n_actions();
        let lead_slot = self.leader_slot();
        let profiles: Vec<ActionProfile> = (0..n)
            .map(|s| self.expand(StateIndex(s)))
            .collect::<Result<_>>()?;
        let mut tables: Vec<Vec<f64>> = Vec::with_capacity(self.players.len());
        let mut outsider_rules = outsiders.iter();
        for slot in 0..self.players.len() {
            let rule = if slot == lead_slot {
                None
            } else {
                outsider_rules.next()
            };
            let mut t = Vec::with_capacity(n as usize * k);
            for (s, y) in profiles.iter().enumerate() {
                let row = match rule {
                    None => solution.action_distribution(y, self.cfg),
                    Some(f) => f(y),
                };
                zd_check_row(s as u64, &row)?;
                t.extend(row);
            }
            tables.push(t);
        }
        let next: Vec<Vec<u32>> = (0..n)
            .map(|w| decode_digits(w, self.players.len(), k as u64))
            .collect();
        let m: TransitionMatrix = zd_core::joint_matrix(&tables, &next, k);
        let stationary = zd_core::stationary(&m)?;

        let welfare: Vec<f64> = profiles
            .iter()
            .map(|y| self.cfg.social_welfare(y))
            .collect();
        let proportionality_residual = tables[lead_slot]
            .chunks(k)
            .zip(&profiles)
            .zip(&welfare)
            .map(|((row, y), w)| {
                let ind = if y.get(self.alliance.leader) == 0 {
                    1.0
                } else {
                    0.0
                };
                (row[0] - ind - solution.phi * (w + solution.alpha0)).abs()
            })
            .fold(0.0, f64::max);
        let mut per_org = vec![0.0; self.cfg.n_orgs];
        let mut exp_welfare = 0.0;
        for ((p, y), w) in stationary.pi.iter().zip(&profiles).zip(&welfare) {
            for (i, e) in per_org.iter_mut().enumerate() {
                *e += p * self.cfg.utility(i, y);
            }
            exp_welfare += p * w;
        }
        let total: f64 = per_org.iter().sum();
        Ok(PinningReport {
            proportionality_residual,
            welfare_residual: (total + solution.alpha0).abs(),
            expected: zd_core::ExpectedUtilities {
                per_org,
                welfare: exp_welfare,
            },
            stationary,
        })
    }
}

fn zd_check_row(state: u64, row: &[f64]) -> Result<()> {
    if row
        .iter()
        .any(|&p| !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p))
        || (row.iter().sum::<f64>() - 1.0).abs() > PROB_TOL
    {
        return Err(Error::InvalidStrategy {
            state,
            reason: format!("{row:?} is not a distribution"),
        });
    }
    Ok(())
}

/// Materializes a feasible solution over its own state space: the full game
/// for a single organization, the reduced game for an alliance.
pub fn complete_strategy(
    solution: &ZdSolution,
    cfg: &GameConfig,
    budget: u64,
) -> Result<ConditionalStrategy> {
    if !solution.feasible {
        return Err(Error::Infeasible {
            gap: solution.gap(),
        });
    }
    let game = effective_game(cfg, &solution.alliance)?;
    let n = game.n_states()?;
    if n > budget {
        return Err(Error::BudgetExceeded {
            needed: n as u128,
            budget,
        });
    }
    let rows = (0..n)
        .map(|s| Ok(solution.action_distribution(&game.expand(StateIndex(s))?, cfg)))
        .collect::<Result<Vec<_>>>()?;
    ConditionalStrategy::dense(rows)
}
