//! Agent roster: ZD players and the classical opponents they are tested against.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{ActionProfile, GameConfig};
use crate::zd_synthesis::{CompletionPolicy, ZdSolution};

/// Strategy names as they appear in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "MMZD")]
    Mmzd,
    #[serde(rename = "MMZDA")]
    Mmzda,
    #[serde(rename = "ALLD")]
    Alld,
    #[serde(rename = "ALLC")]
    Allc,
    #[serde(rename = "RAND")]
    Rand,
    #[serde(rename = "TFT")]
    Tft,
    #[serde(rename = "MIXED")]
    Mixed,
}

impl AgentKind {
    pub const ALL: [AgentKind; 7] = [
        AgentKind::Mmzd,
        AgentKind::Mmzda,
        AgentKind::Alld,
        AgentKind::Allc,
        AgentKind::Rand,
        AgentKind::Tft,
        AgentKind::Mixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Mmzd => "MMZD",
            AgentKind::Mmzda => "MMZDA",
            AgentKind::Alld => "ALLD",
            AgentKind::Allc => "ALLC",
            AgentKind::Rand => "RAND",
            AgentKind::Tft => "TFT",
            AgentKind::Mixed => "MIXED",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("agent kind", format!("unknown strategy `{s}`")))
    }
}

/// Opponent classes a MIXED agent can be assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasicKind {
    Allc,
    Alld,
    Rand,
    Tft,
}

impl BasicKind {
    pub const ALL: [BasicKind; 4] = [
        BasicKind::Allc,
        BasicKind::Alld,
        BasicKind::Rand,
        BasicKind::Tft,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    Alld,
    Allc,
    Rand,
    Tft,
    /// Assigned one basic kind at game start.
    Mixed(Option<BasicKind>),
    Mmzd(Arc<ZdSolution>),
    /// Alliance member; all members share the solution and one random draw per round.
    Mmzda(Arc<ZdSolution>),
}

impl Behavior {
    pub fn kind(&self) -> AgentKind {
        match self {
            Behavior::Alld => AgentKind::Alld,
            Behavior::Allc => AgentKind::Allc,
            Behavior::Rand => AgentKind::Rand,
            Behavior::Tft => AgentKind::Tft,
            Behavior::Mixed(_) => AgentKind::Mixed,
            Behavior::Mmzd(_) => AgentKind::Mmzd,
            Behavior::Mmzda(_) => AgentKind::Mmzda,
        }
    }

    pub fn solution(&self) -> Option<&Arc<ZdSolution>> {
        match self {
            Behavior::Mmzd(s) | Behavior::Mmzda(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub behavior: Behavior,
    pub org: usize,
}

impl AgentSpec {
    pub fn basic(kind: AgentKind, org: usize) -> Result<Self> {
        let behavior = match kind {
            AgentKind::Alld => Behavior::Alld,
            AgentKind::Allc => Behavior::Allc,
            AgentKind::Rand => Behavior::Rand,
            AgentKind::Tft => Behavior::Tft,
            AgentKind::Mixed => Behavior::Mixed(None),
            AgentKind::Mmzd | AgentKind::Mmzda => {
                return Err(Error::Roster(format!(
                    "organization {org}: {kind} needs a synthesized solution"
                )))
            }
        };
        Ok(Self { behavior, org })
    }

    /// ZD agent for `org`; the solution must be feasible.
    pub fn zd(org: usize, solution: Arc<ZdSolution>) -> Result<Self> {
        if !solution.feasible {
            return Err(Error::Infeasible {
                gap: solution.gap(),
            });
        }
        if !solution.alliance.contains(org) {
            return Err(Error::Roster(format!(
                "organization {org} is not covered by the ZD solution"
            )));
        }
        let behavior = if solution.alliance.len() == 1 {
            Behavior::Mmzd(solution)
        } else {
            Behavior::Mmzda(solution)
        };
        Ok(Self { behavior, org })
    }

    /// Fixes the assigned kind of a MIXED agent; other agents are unchanged.
    pub fn resolve_mixed<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let Behavior::Mixed(slot @ None) = &mut self.behavior {
            *slot = Some(BasicKind::ALL[rng.random_range(0..BasicKind::ALL.len())]);
        }
    }
}

/// Synthetic previous profile used to drive round 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstRoundPrior {
    #[default]
    AllMax,
    AllZero,
    UniformRandom,
}

pub fn synthetic_prior<R: Rng + ?Sized>(
    prior: FirstRoundPrior,
    cfg: &GameConfig,
    rng: &mut R,
) -> ActionProfile {
    match prior {
        FirstRoundPrior::AllMax => cfg.all_max_profile(),
        FirstRoundPrior::AllZero => cfg.all_zero_profile(),
        FirstRoundPrior::UniformRandom => ActionProfile::from_raw(
            (0..cfg.n_orgs)
                .map(|_| rng.random_range(0..=cfg.max_rounds))
                .collect(),
        ),
    }
}

/// Round-1 action: the agent's rule applied to the synthetic prior profile.
pub fn first_round_action<R: Rng + ?Sized>(
    agent: &AgentSpec,
    prior: &ActionProfile,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<u32> {
    next_action(agent, prior, cfg, rng)
}

/// Action for the coming round given the previous full profile.
///
/// For alliance members this is the shared alliance action; the simulator
/// calls it once per alliance with the alliance's random stream.
pub fn next_action<R: Rng + ?Sized>(
    agent: &AgentSpec,
    prev: &ActionProfile,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<u32> {
    let r = cfg.max_rounds;
    let basic = match &agent.behavior {
        Behavior::Alld => BasicKind::Alld,
        Behavior::Allc => BasicKind::Allc,
        Behavior::Rand => BasicKind::Rand,
        Behavior::Tft => BasicKind::Tft,
        Behavior::Mixed(Some(k)) => *k,
        Behavior::Mixed(None) => {
            return Err(Error::Roster(format!(
                "organization {}: MIXED agent was not assigned a kind",
                agent.org
            )))
        }
        Behavior::Mmzd(s) | Behavior::Mmzda(s) => return Ok(zd_action(s, prev, cfg, rng)),
    };
    Ok(match basic {
        BasicKind::Alld => 0,
        BasicKind::Allc => r,
        BasicKind::Rand => rng.random_range(0..=r),
        BasicKind::Tft => {
            // total < N r / 2, kept in integers
            if 2 * prev.total() < cfg.n_orgs as u64 * r as u64 {
                rng.random_range(0..=r / 2)
            } else {
                rng.random_range(r.div_ceil(2)..=r)
            }
        }
    })
}

fn zd_action<R: Rng + ?Sized>(
    solution: &ZdSolution,
    prev: &ActionProfile,
    cfg: &GameConfig,
    rng: &mut R,
) -> u32 {
    let p0 = solution.pinned_probability(prev, cfg);
    let u: f64 = rng.random();
    if u < p0 {
        return 0;
    }
    let r = cfg.max_rounds;
    match solution.completion {
        CompletionPolicy::Uniform => rng.random_range(1..=r),
        CompletionPolicy::AllOnMax => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{GameConfig, OrgProfile};
    use crate::rng;
    use crate::zd_synthesis::synthesize_individual;

    fn large_like() -> GameConfig {
        GameConfig::new(
            200,
            33,
            23271.584,
            50193.243,
            vec![OrgProfile::new(3.0, 3e-5, 0.05); 10],
        )
        .unwrap()
    }

    fn feasible2() -> GameConfig {
        GameConfig::new(
            1,
            1,
            1.0,
            1.0,
            vec![
                OrgProfile::new(1.0, 0.6, 0.05),
                OrgProfile::new(4.0, 2.5, 0.05),
            ],
        )
        .unwrap()
    }

    #[test]
    fn kinds_parse_from_scenario_strings() {
        for k in AgentKind::ALL {
            assert_eq!(k.as_str().parse::<AgentKind>().unwrap(), k);
        }
        assert!("GRIM".parse::<AgentKind>().is_err());
    }

    #[test]
    fn deterministic_kinds() {
        let cfg = large_like();
        let mut g = rng::stream(1, 1);
        let prev = cfg.all_zero_profile();
        let alld = AgentSpec::basic(AgentKind::Alld, 0).unwrap();
        let allc = AgentSpec::basic(AgentKind::Allc, 0).unwrap();
        for _ in 0..10 {
            assert_eq!(next_action(&alld, &prev, &cfg, &mut g).unwrap(), 0);
            assert_eq!(next_action(&allc, &prev, &cfg, &mut g).unwrap(), 33);
        }
        assert_eq!(
            first_round_action(&allc, &cfg.all_max_profile(), &cfg, &mut g).unwrap(),
            33
        );
    }

    #[test]
    fn tft_ranges() {
        let cfg = large_like();
        let tft = AgentSpec::basic(AgentKind::Tft, 3).unwrap();
        let mut g = rng::stream(2, 1);
        // previous sum 100 < 165
        let low = ActionProfile::new(vec![10; 10], &cfg).unwrap();
        let mut seen = [false; 34];
        for _ in 0..5000 {
            let a = next_action(&tft, &low, &cfg, &mut g).unwrap();
            assert!(a <= 16);
            seen[a as usize] = true;
        }
        assert!(seen[..=16].iter().all(|&s| s));
        // exactly N r / 2 is not "less than"
        let mut half = vec![16u32; 10];
        half[0] = 17;
        half[1] = 20;
        let half = ActionProfile::new(half, &cfg).unwrap();
        assert_eq!(half.total(), 165);
        for _ in 0..2000 {
            let a = next_action(&tft, &half, &cfg, &mut g).unwrap();
            assert!((17..=33).contains(&a));
        }
        for _ in 0..100 {
            let a = first_round_action(&tft, &cfg.all_max_profile(), &cfg, &mut g).unwrap();
            assert!(a >= 17);
        }
    }

    #[test]
    fn tft_partition_for_even_r() {
        let cfg = GameConfig::new(1, 2, 1.0, 1.0, vec![OrgProfile::new(1.0, 1.0, 0.0); 2]).unwrap();
        let tft = AgentSpec::basic(AgentKind::Tft, 0).unwrap();
        let mut g = rng::stream(3, 1);
        let low = ActionProfile::new(vec![0, 1], &cfg).unwrap();
        let high = ActionProfile::new(vec![1, 1], &cfg).unwrap();
        for _ in 0..500 {
            assert!(next_action(&tft, &low, &cfg, &mut g).unwrap() <= 1);
            assert!(next_action(&tft, &high, &cfg, &mut g).unwrap() >= 1);
        }
    }

    #[test]
    fn mixed_must_be_resolved() {
        let cfg = large_like();
        let mut m = AgentSpec::basic(AgentKind::Mixed, 0).unwrap();
        let mut g = rng::stream(4, 1);
        assert!(next_action(&m, &cfg.all_max_profile(), &cfg, &mut g).is_err());
        m.resolve_mixed(&mut g);
        let assigned = m.behavior.clone();
        m.resolve_mixed(&mut g);
        assert_eq!(m.behavior, assigned);
        assert!(next_action(&m, &cfg.all_max_profile(), &cfg, &mut g).is_ok());
    }

    #[test]
    fn zd_agents_need_feasible_solutions() {
        let cfg = large_like();
        assert!(AgentSpec::basic(AgentKind::Mmzd, 0).is_err());
        let s = Arc::new(synthesize_individual(&cfg, 0, 0.01).unwrap());
        assert!(!s.feasible);
        assert!(matches!(AgentSpec::zd(0, s), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn zd_agent_certain_zero() {
        let cfg = feasible2();
        let s = synthesize_individual(&cfg, 0, 0.5).unwrap();
        assert!(s.feasible);
        let hi = s.alpha0_max;
        let sol = Arc::new(s.with_alpha0(hi).unwrap());
        let agent = AgentSpec::zd(0, sol.clone()).unwrap();
        let mut g = rng::stream(5, 1);
        for y in [[0u32, 0], [0, 1], [1, 0], [1, 1]] {
            let prev = ActionProfile::new(y.to_vec(), &cfg).unwrap();
            assert!((-1e-12..=1.0 + 1e-12).contains(&sol.pinned_probability(&prev, &cfg)));
        }
        let prev = cfg.all_zero_profile();
        assert_eq!(sol.pinned_probability(&prev, &cfg), 1.0);
        for _ in 0..200 {
            assert_eq!(next_action(&agent, &prev, &cfg, &mut g).unwrap(), 0);
        }
        assert!(AgentSpec::zd(1, sol).is_err());
    }
}
