//! Outcome space of one game round and welfare extrema over it.
//!
//! States are action profiles encoded as base-`(r+1)` integers with
//! organization 0 as the most significant digit, so for `N = 2, r = 2` the
//! order is `(0,0), (0,1), (0,2), (1,0), ..., (2,2)`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{increment_digits, profile_count, ActionProfile, GameConfig};

/// 0-based position of a profile in the lexicographic outcome order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateIndex(pub u64);

/// Restriction on one organization's action used to split the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    OwnZero,
    OwnPositive,
    Unconstrained,
}

impl ConstraintMode {
    pub fn admits(self, action: u32) -> bool {
        match self {
            ConstraintMode::OwnZero => action == 0,
            ConstraintMode::OwnPositive => action > 0,
            ConstraintMode::Unconstrained => true,
        }
    }

    pub(crate) fn action_range(self, r: u32) -> RangeInclusive<u32> {
        match self {
            ConstraintMode::OwnZero => 0..=0,
            ConstraintMode::OwnPositive => 1..=r,
            ConstraintMode::Unconstrained => 0..=r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateConstraint {
    pub org: usize,
    pub mode: ConstraintMode,
}

impl StateConstraint {
    pub fn new(org: usize, mode: ConstraintMode, cfg: &GameConfig) -> Result<Self> {
        if org >= cfg.n_orgs {
            return Err(Error::param(
                "org",
                format!("{org} is not below N = {}", cfg.n_orgs),
            ));
        }
        Ok(Self { org, mode })
    }

    pub fn unconstrained() -> Self {
        Self {
            org: 0,
            mode: ConstraintMode::Unconstrained,
        }
    }
}

/// Number of states `(r+1)^N` if it fits in a `u64`.
pub fn state_count(cfg: &GameConfig) -> Result<u64> {
    let n = profile_count(cfg).unwrap_or(u128::MAX);
    u64::try_from(n).map_err(|_| Error::BudgetExceeded {
        needed: n,
        budget: u64::MAX,
    })
}

pub(crate) fn check_budget(cfg: &GameConfig, budget: u64) -> Result<u64> {
    let n = profile_count(cfg).unwrap_or(u128::MAX);
    if n > budget as u128 {
        return Err(Error::BudgetExceeded { needed: n, budget });
    }
    Ok(n as u64)
}

pub fn encode(profile: &ActionProfile, cfg: &GameConfig) -> StateIndex {
    encode_digits(profile.as_slice(), cfg.n_actions() as u64)
}

pub(crate) fn encode_digits(digits: &[u32], base: u64) -> StateIndex {
    StateIndex(digits.iter().fold(0u64, |acc, &d| acc * base + d as u64))
}

pub fn decode(index: StateIndex, cfg: &GameConfig) -> Result<ActionProfile> {
    let size = state_count(cfg)?;
    if index.0 >= size {
        return Err(Error::IndexOutOfRange {
            index: index.0,
            size,
        });
    }
    Ok(ActionProfile::from_raw(decode_digits(
        index.0,
        cfg.n_orgs,
        cfg.n_actions() as u64,
    )))
}

pub(crate) fn decode_digits(mut index: u64, width: usize, base: u64) -> Vec<u32> {
    let mut digits = vec![0u32; width];
    for d in digits.iter_mut().rev() {
        *d = (index % base) as u32;
        index /= base;
    }
    digits
}

/// Social welfare of the profile at `index`.
pub fn state_welfare(index: StateIndex, cfg: &GameConfig) -> Result<f64> {
    Ok(cfg.social_welfare(&decode(index, cfg)?))
}

/// Dense welfare vector over all states, in index order.
pub fn welfare_vector(cfg: &GameConfig, budget: u64) -> Result<Vec<f64>> {
    let n = check_budget(cfg, budget)?;
    let mut digits = vec![0u32; cfg.n_orgs];
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        out.push(cfg.welfare_of_actions(&digits));
        increment_digits(&mut digits, cfg.max_rounds);
    }
    Ok(out)
}

/// Exact welfare extrema with their (lowest-index) witnesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub argmin: StateIndex,
    pub max: f64,
    pub argmax: StateIndex,
}

/// Extrema of state welfare over every state admitted by `constraint`, by enumeration.
pub fn extremal_welfare_bruteforce(
    cfg: &GameConfig,
    constraint: StateConstraint,
    budget: u64,
) -> Result<Extrema> {
    let n = check_budget(cfg, budget)?;
    let mut digits = vec![0u32; cfg.n_orgs];
    let mut ext: Option<Extrema> = None;
    for idx in 0..n {
        if constraint.mode.admits(digits[constraint.org]) {
            let w = cfg.welfare_of_actions(&digits);
            let s = StateIndex(idx);
            match ext.as_mut() {
                None => {
                    ext = Some(Extrema {
                        min: w,
                        argmin: s,
                        max: w,
                        argmax: s,
                    })
                }
                Some(e) => {
                    if w < e.min {
                        e.min = w;
                        e.argmin = s;
                    }
                    if w > e.max {
                        e.max = w;
                        e.argmax = s;
                    }
                }
            }
        }
        increment_digits(&mut digits, cfg.max_rounds);
    }
    // every mode admits at least one action because r >= 1
    Ok(ext.expect("constraint admits no state"))
}

/// Welfare extrema together with profiles attaining them.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareRange {
    pub min: f64,
    pub min_profile: ActionProfile,
    pub max: f64,
    pub max_profile: ActionProfile,
}

/// Extrema of state welfare without enumerating the state space.
///
/// Welfare depends on a profile only through total participation `T` and the
/// cost term `sum_i beta_i y_i`. For each admissible action of the constrained
/// organization and each total of the others, the cheapest (most expensive)
/// way to reach that total fills organizations in ascending (descending)
/// `beta` order, which yields the maximum (minimum) welfare for that total.
pub fn extremal_welfare_structured(cfg: &GameConfig, constraint: StateConstraint) -> WelfareRange {
    block_welfare_range(
        cfg,
        &[constraint.org],
        constraint.mode.action_range(cfg.max_rounds),
    )
}

/// Welfare extrema when every organization in `block` plays one shared action
/// drawn from `block_actions` and all other organizations act freely.
///
/// Cost is `O(r * N * r)`.
pub fn block_welfare_range(
    cfg: &GameConfig,
    block: &[usize],
    block_actions: RangeInclusive<u32>,
) -> WelfareRange {
    let r = cfg.max_rounds;
    let mut in_block = vec![false; cfg.n_orgs];
    for &i in block {
        in_block[i] = true;
    }
    let mut free: Vec<usize> = (0..cfg.n_orgs).filter(|&i| !in_block[i]).collect();
    // stable sort keeps index order among equal costs
    free.sort_by(|&a, &b| cfg.orgs[a].iter_cost.total_cmp(&cfg.orgs[b].iter_cost));
    let block_cost: f64 = block.iter().map(|&i| cfg.orgs[i].iter_cost).sum();
    let free_max = free.len() as u64 * r as u64;
    let betas: Vec<f64> = free.iter().map(|&i| cfg.orgs[i].iter_cost).collect();
    let cheap = FillCost::new(betas.iter().copied(), r);
    let dear = FillCost::new(betas.iter().rev().copied(), r);

    // (approx welfare, block action, free total, ascending fill?)
    let mut best_max: Option<(f64, u32, u64, bool)> = None;
    let mut best_min: Option<(f64, u32, u64, bool)> = None;
    for a in block_actions {
        let block_total = block.len() as u64 * a as u64;
        for t in 0..=free_max {
            let total = block_total + t;
            let w_hi = cfg.welfare_from_parts(total, block_cost * a as f64 + cheap.at(t));
            let w_lo = cfg.welfare_from_parts(total, block_cost * a as f64 + dear.at(t));
            if best_max.is_none_or(|b| w_hi > b.0) {
                best_max = Some((w_hi, a, t, true));
            }
            if best_min.is_none_or(|b| w_lo < b.0) {
                best_min = Some((w_lo, a, t, false));
            }
        }
    }
    let build = |(_, a, t, ascending): (f64, u32, u64, bool)| {
        let mut y = vec![0u32; cfg.n_orgs];
        for &i in block {
            y[i] = a;
        }
        let order: Vec<usize> = if ascending {
            free.clone()
        } else {
            free.iter().rev().copied().collect()
        };
        let mut left = t;
        for i in order {
            let take = left.min(r as u64);
            y[i] = take as u32;
            left -= take;
        }
        ActionProfile::from_raw(y)
    };
    let max_profile = build(best_max.expect("empty action range"));
    let min_profile = build(best_min.expect("empty action range"));
    WelfareRange {
        min: cfg.social_welfare(&min_profile),
        min_profile,
        max: cfg.social_welfare(&max_profile),
        max_profile,
    }
}

/// `sum beta_i y_i` when a participation total is assigned greedily, `r`
/// units per organization, along a fixed order.
struct FillCost {
    r: u32,
    betas: Vec<f64>,
    /// `prefix[q]`: cost of the first `q` organizations at full participation.
    prefix: Vec<f64>,
}

impl FillCost {
    fn new(order: impl Iterator<Item = f64>, r: u32) -> Self {
        let betas: Vec<f64> = order.collect();
        let mut prefix = Vec::with_capacity(betas.len() + 1);
        prefix.push(0.0);
        for b in &betas {
            prefix.push(prefix.last().unwrap() + b * r as f64);
        }
        Self { r, betas, prefix }
    }

    fn at(&self, total: u64) -> f64 {
        let q = (total / self.r as u64) as usize;
        let rem = total % self.r as u64;
        let partial = if rem > 0 {
            self.betas[q] * rem as f64
        } else {
            0.0
        };
        self.prefix[q] + partial
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::fixtures::*;
    use crate::game_model::{OrgProfile, DEFAULT_ENUMERATION_BUDGET};

    fn p(v: &[u32]) -> ActionProfile {
        ActionProfile::from_raw(v.to_vec())
    }

    #[test]
    fn encode_examples() {
        let cfg = tiny2();
        assert_eq!(encode(&p(&[0, 0]), &cfg), StateIndex(0));
        assert_eq!(encode(&p(&[0, 2]), &cfg), StateIndex(2));
        assert_eq!(encode(&p(&[2, 2]), &cfg), StateIndex(8));
    }

    #[test]
    fn decode_examples() {
        let cfg = tiny2();
        assert_eq!(decode(StateIndex(0), &cfg).unwrap(), p(&[0, 0]));
        assert_eq!(decode(StateIndex(3), &cfg).unwrap(), p(&[1, 0]));
        let bin3 =
            GameConfig::new(1, 1, 1.0, 1.0, vec![OrgProfile::new(1.0, 1.0, 0.0); 3]).unwrap();
        assert_eq!(decode(StateIndex(5), &bin3).unwrap(), p(&[1, 0, 1]));
        assert!(matches!(
            decode(StateIndex(9), &cfg),
            Err(Error::IndexOutOfRange { index: 9, size: 9 })
        ));
    }

    #[test]
    fn state_welfare_examples() {
        assert!((state_welfare(StateIndex(0), &dilemma4()).unwrap() + 0.2).abs() < 1e-15);
        assert!((state_welfare(StateIndex(80), &dilemma4()).unwrap() - 9.8148).abs() < 1e-4);
        let w = state_welfare(StateIndex(4), &tiny2()).unwrap();
        assert!((w - (7.0 * (1.0 - 1.0 / 3.0) - 0.3 - 0.2)).abs() < 1e-12);
        assert!((w - 4.1667).abs() < 1e-4);
    }

    #[test]
    fn bruteforce_examples() {
        let cfg = tiny2();
        let e = extremal_welfare_bruteforce(&cfg, StateConstraint::unconstrained(), 100).unwrap();
        assert_eq!(e.argmax, StateIndex(8));
        assert!((e.max - 4.8).abs() < 1e-12);
        assert_eq!(e.argmin, StateIndex(0));

        let zero = StateConstraint::new(0, ConstraintMode::OwnZero, &cfg).unwrap();
        let e = extremal_welfare_bruteforce(&cfg, zero, 100).unwrap();
        assert_eq!(decode(e.argmax, &cfg).unwrap(), p(&[0, 2]));

        let mut costly = dilemma4();
        for o in &mut costly.orgs {
            o.iter_cost = 100.0;
        }
        let zero = StateConstraint::new(1, ConstraintMode::OwnZero, &costly).unwrap();
        let e = extremal_welfare_bruteforce(&costly, zero, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(e.argmax, StateIndex(0));

        assert!(extremal_welfare_bruteforce(&dilemma4(), zero, 10).is_err());
    }

    #[test]
    fn structured_matches_bruteforce_on_fixtures() {
        for cfg in [tiny2(), dilemma4()] {
            for org in 0..cfg.n_orgs {
                for mode in [
                    ConstraintMode::OwnZero,
                    ConstraintMode::OwnPositive,
                    ConstraintMode::Unconstrained,
                ] {
                    let c = StateConstraint::new(org, mode, &cfg).unwrap();
                    let b = extremal_welfare_bruteforce(&cfg, c, 1000).unwrap();
                    let s = extremal_welfare_structured(&cfg, c);
                    assert_eq!(b.min, s.min);
                    assert_eq!(b.max, s.max);
                    assert!(mode.admits(s.max_profile.get(org)));
                }
            }
        }
    }

    #[test]
    fn structured_runs_at_full_scale() {
        let orgs = (0..10)
            .map(|i| OrgProfile::new(1.0 + i as f64 * 0.3, 3e-5 * (1.0 + i as f64 * 0.05), 0.05))
            .collect();
        let cfg = GameConfig::new(200, 33, 23271.584, 50193.243, orgs).unwrap();
        let c = StateConstraint::new(0, ConstraintMode::OwnPositive, &cfg).unwrap();
        let s = extremal_welfare_structured(&cfg, c);
        assert!(s.min <= s.max);
        assert_eq!(cfg.social_welfare(&s.max_profile), s.max);
        assert!(s.min_profile.get(0) > 0 && s.max_profile.get(0) > 0);
    }
}
