//! Economic model of the cross-silo federated-learning participation game.
//!
//! Each organization chooses how many of the `r` global aggregation rounds it
//! joins. The trained model is a public good: every organization earns revenue
//! from the precision gain of the global model, which depends only on the total
//! participation, while training cost is private.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of pure profiles visited by exhaustive searches.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// Economic profile of a single organization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrgProfile {
    /// Revenue per unit of model precision gain (`m_i`).
    pub unit_revenue: f64,
    /// Computation cost of one local iteration (`beta_i`).
    pub iter_cost: f64,
    /// Communication cost charged once per task (`C_m^i`), even at zero participation.
    pub comm_cost: f64,
}

impl OrgProfile {
    pub fn new(unit_revenue: f64, iter_cost: f64, comm_cost: f64) -> Self {
        Self {
            unit_revenue,
            iter_cost,
            comm_cost,
        }
    }

    /// Checks the profile invariants. Zero `iter_cost` is tolerated so that
    /// degenerate costless organizations can be modelled.
    pub fn validate(&self, idx: usize) -> Result<()> {
        if !(self.unit_revenue.is_finite() && self.unit_revenue > 0.0) {
            return Err(Error::param(
                format!("orgs[{idx}].unit_revenue"),
                "must be finite and positive",
            ));
        }
        if !(self.iter_cost.is_finite() && self.iter_cost >= 0.0) {
            return Err(Error::param(
                format!("orgs[{idx}].iter_cost"),
                "must be finite and non-negative",
            ));
        }
        if !(self.comm_cost.is_finite() && self.comm_cost >= 0.0) {
            return Err(Error::param(
                format!("orgs[{idx}].comm_cost"),
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Global game parameters plus the per-organization economics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub n_orgs: usize,
    /// Local iterations per aggregation round (`K`).
    pub local_iters: u32,
    /// Number of aggregation rounds per task (`r`); actions range over `0..=r`.
    pub max_rounds: u32,
    pub theta0: f64,
    pub theta1: f64,
    pub orgs: Vec<OrgProfile>,
}

impl GameConfig {
    pub fn new(
        local_iters: u32,
        max_rounds: u32,
        theta0: f64,
        theta1: f64,
        orgs: Vec<OrgProfile>,
    ) -> Result<Self> {
        let cfg = Self {
            n_orgs: orgs.len(),
            local_iters,
            max_rounds,
            theta0,
            theta1,
            orgs,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_orgs < 2 {
            return Err(Error::param(
                "n_orgs",
                "at least two organizations are required",
            ));
        }
        if self.orgs.len() != self.n_orgs {
            return Err(Error::param(
                "orgs",
                format!(
                    "expected {} profiles, found {}",
                    self.n_orgs,
                    self.orgs.len()
                ),
            ));
        }
        if self.local_iters < 1 {
            return Err(Error::param("local_iters", "must be at least 1"));
        }
        if self.max_rounds < 1 {
            return Err(Error::param("max_rounds", "must be at least 1"));
        }
        if !(self.theta0.is_finite() && self.theta0 > 0.0) {
            return Err(Error::param("theta0", "must be finite and positive"));
        }
        if !(self.theta1.is_finite() && self.theta1 > 0.0) {
            return Err(Error::param("theta1", "must be finite and positive"));
        }
        let chi0 = self.untrained_precision();
        if !(chi0.is_finite() && chi0 > 0.0) {
            return Err(Error::param(
                "theta0/theta1",
                "untrained precision must be finite",
            ));
        }
        for (i, o) in self.orgs.iter().enumerate() {
            o.validate(i)?;
        }
        Ok(())
    }

    /// Number of actions available to each organization (`r + 1`).
    pub fn n_actions(&self) -> usize {
        self.max_rounds as usize + 1
    }

    /// Precision of the untrained model, `theta0 / theta1`.
    pub fn untrained_precision(&self) -> f64 {
        self.theta0 / self.theta1
    }

    /// Model precision as a function of total participation `sum_i y_i`.
    pub fn precision_at_total(&self, total: u64) -> f64 {
        self.theta0 / (self.theta1 + self.local_iters as f64 * total as f64)
    }

    /// Precision gain over the untrained model for a given total participation.
    pub fn precision_gain(&self, total: u64) -> f64 {
        self.untrained_precision() - self.precision_at_total(total)
    }

    pub fn precision(&self, profile: &ActionProfile) -> f64 {
        self.precision_at_total(profile.total())
    }

    pub fn revenue(&self, org: usize, profile: &ActionProfile) -> f64 {
        self.orgs[org].unit_revenue * self.precision_gain(profile.total())
    }

    pub fn cost(&self, org: usize, action: u32) -> f64 {
        let o = &self.orgs[org];
        o.iter_cost * self.local_iters as f64 * action as f64 + o.comm_cost
    }

    pub fn utility(&self, org: usize, profile: &ActionProfile) -> f64 {
        self.revenue(org, profile) - self.cost(org, profile.get(org))
    }

    pub fn total_unit_revenue(&self) -> f64 {
        self.orgs.iter().map(|o| o.unit_revenue).sum()
    }

    pub fn total_comm_cost(&self) -> f64 {
        self.orgs.iter().map(|o| o.comm_cost).sum()
    }

    /// Social welfare from its two sufficient statistics: total participation
    /// and the participation-weighted iteration cost `sum_i beta_i y_i`.
    pub fn welfare_from_parts(&self, total: u64, weighted_iter_cost: f64) -> f64 {
        self.total_unit_revenue() * self.precision_gain(total)
            - self.local_iters as f64 * weighted_iter_cost
            - self.total_comm_cost()
    }

    /// Sum of all organizations' utilities, evaluated in closed form.
    pub fn social_welfare(&self, profile: &ActionProfile) -> f64 {
        self.welfare_of_actions(profile.as_slice())
    }

    pub(crate) fn welfare_of_actions(&self, actions: &[u32]) -> f64 {
        let total: u64 = actions.iter().map(|&a| a as u64).sum();
        let weighted: f64 = actions
            .iter()
            .zip(&self.orgs)
            .map(|(&a, o)| o.iter_cost * a as f64)
            .sum();
        self.welfare_from_parts(total, weighted)
    }

    pub fn all_max_profile(&self) -> ActionProfile {
        ActionProfile(vec![self.max_rounds; self.n_orgs])
    }

    pub fn all_zero_profile(&self) -> ActionProfile {
        ActionProfile(vec![0; self.n_orgs])
    }
}

/// Per-organization participation counts for one task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionProfile(Vec<u32>);

impl ActionProfile {
    pub fn new(actions: Vec<u32>, cfg: &GameConfig) -> Result<Self> {
        if actions.len() != cfg.n_orgs {
            return Err(Error::param(
                "profile",
                format!("expected {} actions, found {}", cfg.n_orgs, actions.len()),
            ));
        }
        if let Some((i, a)) = actions
            .iter()
            .enumerate()
            .find(|(_, &a)| a > cfg.max_rounds)
        {
            return Err(Error::param(
                format!("profile[{i}]"),
                format!("action {a} exceeds r = {}", cfg.max_rounds),
            ));
        }
        Ok(Self(actions))
    }

    /// Wraps actions without checking them against a configuration.
    pub(crate) fn from_raw(actions: Vec<u32>) -> Self {
        Self(actions)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, org: usize) -> u32 {
        self.0[org]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&a| a as u64).sum()
    }

    /// Copy of this profile with organization `org` playing `action`.
    pub fn with_action(&self, org: usize, action: u32) -> Self {
        let mut v = self.0.clone();
        v[org] = action;
        Self(v)
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

/// Per-iteration cost from device characteristics:
/// `(alpha_i / 2) * f_i^2 * D_i * S_i`.
pub fn beta_from_device(
    capacitance_half: f64,
    cpu_freq: f64,
    data_units: f64,
    cycles_per_unit: f64,
) -> Result<f64> {
    for (name, v) in [
        ("capacitance_half", capacitance_half),
        ("cpu_freq", cpu_freq),
        ("data_units", data_units),
        ("cycles_per_unit", cycles_per_unit),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, "must be finite and positive"));
        }
    }
    Ok(capacitance_half * cpu_freq * cpu_freq * data_units * cycles_per_unit)
}

/// Outcome of the social-dilemma check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilemmaReport {
    /// `true` for organization `i` when training alone is unprofitable at every
    /// positive participation level.
    pub per_org: Vec<bool>,
    /// Welfare when every organization participates in all rounds.
    pub full_cooperation_welfare: f64,
    /// Welfare at the all-zero profile, `-sum_i C_m^i`.
    pub zero_participation_welfare: f64,
}

impl DilemmaReport {
    pub fn all_orgs(&self) -> bool {
        self.per_org.iter().all(|&b| b)
    }

    /// Full cooperation must pay off for a dilemma to exist.
    pub fn premise_holds(&self) -> bool {
        self.full_cooperation_welfare > 0.0
    }

    pub fn is_dilemma(&self) -> bool {
        self.all_orgs() && self.premise_holds()
    }
}

/// Solo-training profitability check for every organization.
///
/// Organization `i` satisfies the condition when
/// `m_i (chi0 - theta0 / (theta1 + K y)) - beta_i K y < 0` for all `y` in `1..=r`.
pub fn dilemma_condition(cfg: &GameConfig) -> DilemmaReport {
    let k = cfg.local_iters as f64;
    let per_org = cfg
        .orgs
        .iter()
        .map(|o| {
            (1..=cfg.max_rounds).all(|y| {
                o.unit_revenue * cfg.precision_gain(y as u64) - o.iter_cost * k * (y as f64) < 0.0
            })
        })
        .collect();
    DilemmaReport {
        per_org,
        full_cooperation_welfare: cfg.social_welfare(&cfg.all_max_profile()),
        zero_participation_welfare: cfg.social_welfare(&cfg.all_zero_profile()),
    }
}

/// Number of pure profiles `(r + 1)^N`, or `None` on overflow.
pub(crate) fn profile_count(cfg: &GameConfig) -> Option<u128> {
    (cfg.n_actions() as u128).checked_pow(cfg.n_orgs as u32)
}

/// All pure Nash equilibria by exhaustive best-response checking.
///
/// Utility of organization `i` depends on the others only through their total
/// participation, so best responses are tabulated per `(i, total of others)`
/// before the profile sweep.
pub fn find_pure_nash(cfg: &GameConfig, budget: u64) -> Result<Vec<ActionProfile>> {
    let count = profile_count(cfg).unwrap_or(u128::MAX);
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: count,
            budget,
        });
    }
    let n = cfg.n_orgs;
    let r = cfg.max_rounds;
    let others_max = (n as u64 - 1) * r as u64;

    // best[i][t]: highest utility organization i can reach when the others total t.
    let best: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..=others_max)
                .map(|t| {
                    (0..=r)
                        .map(|a| own_utility(cfg, i, a, t))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut digits = vec![0u32; n];
    for _ in 0..count as u64 {
        let total: u64 = digits.iter().map(|&a| a as u64).sum();
        let stable = (0..n).all(|i| {
            let others = total - digits[i] as u64;
            best[i][others as usize] <= own_utility(cfg, i, digits[i], others)
        });
        if stable {
            out.push(ActionProfile(digits.clone()));
        }
        increment_digits(&mut digits, r);
    }
    Ok(out)
}

/// Utility of organization `org` playing `action` while the others total `others`.
fn own_utility(cfg: &GameConfig, org: usize, action: u32, others: u64) -> f64 {
    cfg.orgs[org].unit_revenue * cfg.precision_gain(others + action as u64) - cfg.cost(org, action)
}

/// Advances a most-significant-first base-`(r+1)` counter.
pub(crate) fn increment_digits(digits: &mut [u32], r: u32) {
    for d in digits.iter_mut().rev() {
        if *d < r {
            *d += 1;
            return;
        }
        *d = 0;
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn p(v: &[u32]) -> ActionProfile {
        ActionProfile(v.to_vec())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn beta_from_device_examples() {
        assert_eq!(beta_from_device(0.5, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(beta_from_device(0.5, 2.0, 3.0, 4.0).unwrap(), 24.0);
        assert!(beta_from_device(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(beta_from_device(0.5, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn precision_examples() {
        let cfg =
            GameConfig::new(1, 2, 100.0, 100.0, vec![OrgProfile::new(1.0, 1.0, 0.0); 4]).unwrap();
        assert_eq!(cfg.precision(&p(&[0, 0, 0, 0])), 1.0);
        assert!(close(
            cfg.precision(&p(&[2, 2, 2, 2])),
            100.0 / 108.0,
            1e-15
        ));

        let large = GameConfig::new(
            200,
            33,
            23271.584,
            50193.243,
            vec![OrgProfile::new(1.0, 1.0, 0.0); 10],
        )
        .unwrap();
        assert!(close(
            large.untrained_precision(),
            23271.584 / 50193.243,
            1e-15
        ));
        assert!(close(large.untrained_precision(), 0.463639, 1e-6));
    }

    #[test]
    fn revenue_cost_utility_examples() {
        let cfg = dilemma4();
        assert_eq!(cfg.revenue(0, &p(&[0, 0, 0, 0])), 0.0);
        let full = p(&[2, 2, 2, 2]);
        assert!(close(
            cfg.revenue(2, &full),
            50.0 * (1.0 - 100.0 / 108.0),
            1e-12
        ));
        assert!(close(cfg.revenue(0, &p(&[1, 0, 0, 0])), 0.49505, 1e-5));
        assert!(close(cfg.cost(0, 0), 0.05, 1e-15));
        assert!(close(cfg.cost(0, 2), 1.25, 1e-15));
        assert!(close(cfg.utility(1, &full), 2.4537, 1e-4));
        assert!(close(cfg.utility(0, &p(&[1, 0, 0, 0])), -0.15495, 1e-5));
        for i in 0..4 {
            assert_eq!(cfg.utility(i, &cfg.all_zero_profile()), -0.05);
        }

        let free =
            GameConfig::new(1, 2, 1.0, 1.0, vec![OrgProfile::new(1.0, 0.0, 0.0); 2]).unwrap();
        assert_eq!(free.cost(0, 2), 0.0);
    }

    #[test]
    fn welfare_examples() {
        let cfg = dilemma4();
        assert!(close(
            cfg.social_welfare(&cfg.all_zero_profile()),
            -0.2,
            1e-15
        ));
        assert!(close(cfg.social_welfare(&p(&[2, 2, 2, 2])), 9.8148, 1e-4));

        let mut het = tiny2();
        het.orgs[1].iter_cost = 0.35;
        let d = het.social_welfare(&p(&[1, 0])) - het.social_welfare(&p(&[0, 1]));
        assert!(close(d, 1.0 * (0.35 - 0.1), 1e-12));
    }

    #[test]
    fn dilemma_condition_examples() {
        let rep = dilemma_condition(&dilemma4());
        assert_eq!(rep.per_org, vec![true; 4]);
        assert!(close(rep.full_cooperation_welfare, 9.8148, 1e-4));
        assert!(rep.is_dilemma());

        let mut rich = dilemma4();
        rich.orgs[0].unit_revenue = 1e6;
        assert!(!dilemma_condition(&rich).per_org[0]);

        let mut free = dilemma4();
        free.orgs[3].iter_cost = 0.0;
        let rep = dilemma_condition(&free);
        assert!(!rep.per_org[3]);
        assert!(rep.per_org[0]);
    }

    #[test]
    fn pure_nash_examples() {
        let ne = find_pure_nash(&dilemma4(), DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(ne, vec![p(&[0, 0, 0, 0])]);

        let free =
            GameConfig::new(1, 3, 1.0, 1.0, vec![OrgProfile::new(2.0, 0.0, 0.0); 2]).unwrap();
        assert_eq!(
            find_pure_nash(&free, DEFAULT_ENUMERATION_BUDGET).unwrap(),
            vec![p(&[3, 3])]
        );

        let big =
            GameConfig::new(200, 33, 1.0, 1.0, vec![OrgProfile::new(2.0, 0.1, 0.0); 10]).unwrap();
        assert!(matches!(
            find_pure_nash(&big, DEFAULT_ENUMERATION_BUDGET),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(GameConfig::new(1, 2, 1.0, 1.0, vec![OrgProfile::new(1.0, 1.0, 0.0)]).is_err());
        assert!(GameConfig::new(0, 2, 1.0, 1.0, vec![OrgProfile::new(1.0, 1.0, 0.0); 2]).is_err());
        assert!(GameConfig::new(1, 0, 1.0, 1.0, vec![OrgProfile::new(1.0, 1.0, 0.0); 2]).is_err());
        assert!(GameConfig::new(1, 2, 0.0, 1.0, vec![OrgProfile::new(1.0, 1.0, 0.0); 2]).is_err());
        assert!(GameConfig::new(1, 2, 1.0, 1.0, vec![OrgProfile::new(0.0, 1.0, 0.0); 2]).is_err());
        assert!(ActionProfile::new(vec![3, 0], &tiny2()).is_err());
        assert!(ActionProfile::new(vec![1], &tiny2()).is_err());
    }

    #[test]
    fn increment_digits_counts_lexicographically() {
        let mut d = vec![0u32, 0];
        let mut seen = vec![d.clone()];
        for _ in 0..8 {
            increment_digits(&mut d, 2);
            seen.push(d.clone());
        }
        assert_eq!(seen[2], vec![0, 2]);
        assert_eq!(seen[3], vec![1, 0]);
        assert_eq!(seen[8], vec![2, 2]);
    }
}
