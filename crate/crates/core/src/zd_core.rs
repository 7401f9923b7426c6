//! Exact small-game machinery: one-round-memory strategies, the joint
//! transition matrix, its stationary distribution and the pinned-welfare check.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game_model::{increment_digits, ActionProfile, GameConfig};
use crate::state_space::{check_budget, decode, decode_digits, StateIndex};

/// Largest state space for which matrices are built densely.
pub const DEFAULT_DENSE_BUDGET: u64 = 4096;

/// Tolerance for strategy row sums and probability bounds.
pub const PROB_TOL: f64 = 1e-12;

/// Damping weight applied when the stationary vector is not unique.
pub const DAMPING: f64 = 1e-6;

const PIVOT_TOL: f64 = 1e-10;

pub type StrategyRule = Arc<dyn Fn(&ActionProfile) -> Vec<f64> + Send + Sync>;

/// Mixed strategy conditioned on the previous round's full action profile.
#[derive(Clone)]
pub enum ConditionalStrategy {
    /// Materialized table, row-major `states x actions`.
    Dense { n_actions: usize, table: Vec<f64> },
    /// Rule evaluated on demand from the decoded previous profile.
    Lazy {
        n_actions: usize,
        rule: StrategyRule,
    },
}

impl fmt::Debug for ConditionalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionalStrategy::Dense { n_actions, table } => f
                .debug_struct("Dense")
                .field("n_actions", n_actions)
                .field("n_states", &(table.len() / n_actions))
                .finish(),
            ConditionalStrategy::Lazy { n_actions, .. } => f
                .debug_struct("Lazy")
                .field("n_actions", n_actions)
                .finish(),
        }
    }
}

fn check_row(state: u64, row: &[f64]) -> Result<()> {
    if let Some(p) = row
        .iter()
        .find(|&&p| !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p))
    {
        return Err(Error::InvalidStrategy {
            state,
            reason: format!("probability {p} outside [0, 1]"),
        });
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidStrategy {
            state,
            reason: format!("row sums to {s}"),
        });
    }
    Ok(())
}

impl ConditionalStrategy {
    /// Dense strategy from one probability row per state.
    pub fn dense(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if n_actions == 0 {
            return Err(Error::param(
                "rows",
                "strategy needs at least one state and action",
            ));
        }
        let mut table = Vec::with_capacity(rows.len() * n_actions);
        for (j, row) in rows.into_iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::InvalidStrategy {
                    state: j as u64,
                    reason: format!("expected {n_actions} actions, found {}", row.len()),
                });
            }
            check_row(j as u64, &row)?;
            table.extend(row);
        }
        Ok(ConditionalStrategy::Dense { n_actions, table })
    }

    pub fn lazy(n_actions: usize, rule: StrategyRule) -> Self {
        ConditionalStrategy::Lazy { n_actions, rule }
    }

    fn from_fn(
        cfg: &GameConfig,
        budget: u64,
        mut f: impl FnMut(&[u32]) -> Vec<f64>,
    ) -> Result<Self> {
        let n = check_budget(cfg, budget)?;
        let mut digits = vec![0u32; cfg.n_orgs];
        let mut rows = Vec::with_capacity(n as usize);
        for _ in 0..n {
            rows.push(f(&digits));
            increment_digits(&mut digits, cfg.max_rounds);
        }
        Self::dense(rows)
    }

    pub fn uniform(cfg: &GameConfig, budget: u64) -> Result<Self> {
        let k = cfg.n_actions();
        Self::from_fn(cfg, budget, |_| vec![1.0 / k as f64; k])
    }

    /// Plays `action` with certainty regardless of history.
    pub fn constant(cfg: &GameConfig, action: u32, budget: u64) -> Result<Self> {
        let k = cfg.n_actions();
        Self::from_fn(cfg, budget, |_| one_hot(k, action as usize))
    }

    /// Repeats organization `org`'s own previous action.
    pub fn repeat_own(cfg: &GameConfig, org: usize, budget: u64) -> Result<Self> {
        let k = cfg.n_actions();
        Self::from_fn(cfg, budget, |d| one_hot(k, d[org] as usize))
    }

    /// Independent random rows, each a normalized vector of uniform draws.
    pub fn random<R: Rng + ?Sized>(cfg: &GameConfig, budget: u64, rng: &mut R) -> Result<Self> {
        let k = cfg.n_actions();
        Self::from_fn(cfg, budget, |_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|x| x / s).collect();
            // absorb rounding into the last entry so the row sums to one
            let head: f64 = row[..k - 1].iter().sum();
            row[k - 1] = 1.0 - head;
            row
        })
    }

    pub fn n_actions(&self) -> usize {
        match self {
            ConditionalStrategy::Dense { n_actions, .. }
            | ConditionalStrategy::Lazy { n_actions, .. } => *n_actions,
        }
    }

    /// Action distribution after the previous state `state`.
    pub fn row(&self, state: StateIndex, cfg: &GameConfig) -> Result<Vec<f64>> {
        match self {
            ConditionalStrategy::Dense { n_actions, table } => {
                let start = state.0 as usize * n_actions;
                table
                    .get(start..start + n_actions)
                    .map(<[f64]>::to_vec)
                    .ok_or(Error::IndexOutOfRange {
                        index: state.0,
                        size: (table.len() / n_actions) as u64,
                    })
            }
            ConditionalStrategy::Lazy { rule, .. } => Ok(rule(&decode(state, cfg)?)),
        }
    }

    /// Dense copy with every row validated.
    pub fn materialize(&self, cfg: &GameConfig, budget: u64) -> Result<Self> {
        match self {
            ConditionalStrategy::Dense { .. } => Ok(self.clone()),
            ConditionalStrategy::Lazy { rule, .. } => {
                Self::from_fn(cfg, budget, |d| rule(&ActionProfile::from_raw(d.to_vec())))
            }
        }
    }

    pub(crate) fn dense_rows(&self, cfg: &GameConfig, n_states: u64) -> Result<Vec<f64>> {
        let k = cfg.n_actions();
        if self.n_actions() != k {
            return Err(Error::param(
                "strategy",
                format!("expects {} actions, game has {k}", self.n_actions()),
            ));
        }
        let table = match self.materialize(cfg, n_states)? {
            ConditionalStrategy::Dense { table, .. } => table,
            ConditionalStrategy::Lazy { .. } => unreachable!(),
        };
        if table.len() as u64 != n_states * k as u64 {
            return Err(Error::param(
                "strategy",
                format!("covers {} states, game has {n_states}", table.len() / k),
            ));
        }
        Ok(table)
    }
}

fn one_hot(k: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[at] = 1.0;
    v
}

/// Square row-major matrix of one-step transition probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotStochastic("matrix is not square".into()));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: usize, w: usize) -> f64 {
        self.data[v * self.n + w]
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.data[v * self.n..(v + 1) * self.n]
    }

    /// Largest deviation of a row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|v| (self.row(v).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn damped(&self, eps: f64) -> Self {
        let u = eps / self.n as f64;
        Self {
            n: self.n,
            data: self.data.iter().map(|&m| (1.0 - eps) * m + u).collect(),
        }
    }

    /// `max_w |(pi^T M)_w - pi_w|`.
    pub fn stationarity_residual(&self, pi: &[f64]) -> f64 {
        let mut next = vec![0.0; self.n];
        for (v, &p) in pi.iter().enumerate() {
            for (w, &m) in self.row(v).iter().enumerate() {
                next[w] += p * m;
            }
        }
        next.iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `M[v][w] = prod_i p^i(v -> y_i(w))`.
pub fn build_markov(
    strategies: &[ConditionalStrategy],
    cfg: &GameConfig,
    budget: u64,
) -> Result<TransitionMatrix> {
    if strategies.len() != cfg.n_orgs {
        return Err(Error::param(
            "strategies",
            format!(
                "expected {} strategies, found {}",
                cfg.n_orgs,
                strategies.len()
            ),
        ));
    }
    let n = check_budget(cfg, budget)?;
    let k = cfg.n_actions();
    let tables = strategies
        .iter()
        .map(|s| s.dense_rows(cfg, n))
        .collect::<Result<Vec<_>>>()?;
    let next_states: Vec<Vec<u32>> = (0..n)
        .map(|w| decode_digits(w, cfg.n_orgs, k as u64))
        .collect();

    Ok(joint_matrix(&tables, &next_states, k))
}

/// Transition matrix of independent players: `tables[i]` holds player `i`'s
/// rows over the shared state space and `next_states[w]` the per-player
/// actions that make up state `w`.
pub(crate) fn joint_matrix(
    tables: &[Vec<f64>],
    next_states: &[Vec<u32>],
    k: usize,
) -> TransitionMatrix {
    let n = next_states.len();
    let mut data = vec![0.0; n * n];
    for v in 0..n {
        for (w, y) in next_states.iter().enumerate() {
            data[v * n + w] = tables
                .iter()
                .zip(y)
                .map(|(t, &a)| t[v * k + a as usize])
                .product();
        }
    }
    TransitionMatrix { n, data }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub pi: Vec<f64>,
    /// `||pi^T M - pi^T||_inf` against the undamped matrix.
    pub residual: f64,
    /// `false` when the chain needed damping (reducible with several closed
    /// classes, or periodic).
    pub unique: bool,
}

/// Stationary distribution as the normalized left null vector of `M - I`.
pub fn stationary(m: &TransitionMatrix) -> Result<StationaryResult> {
    if let Some(x) = m.data.iter().find(|&&x| !(x >= -PROB_TOL && x.is_finite())) {
        return Err(Error::NotStochastic(format!("entry {x} is negative")));
    }
    let err = m.row_sum_error();
    if err > 1e-9 {
        return Err(Error::NotStochastic(format!(
            "row sum deviates from 1 by {err}"
        )));
    }
    let (pi, unique) = match left_null_vector(m) {
        Some(pi) if period(m, &pi) == 1 => (pi, true),
        _ => {
            let damped = m.damped(DAMPING);
            let pi = left_null_vector(&damped).ok_or_else(|| {
                Error::NotStochastic("damped chain has no unique fixed point".into())
            })?;
            (pi, false)
        }
    };
    Ok(StationaryResult {
        residual: m.stationarity_residual(&pi),
        pi,
        unique,
    })
}

/// The unique probability vector with `pi^T (M - I) = 0`, or `None` when the
/// null space is not one-dimensional.
fn left_null_vector(m: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = m.n;
    // a = (M - I)^T
    let mut a = vec![0.0; n * n];
    for v in 0..n {
        for w in 0..n {
            a[w * n + v] = m.get(v, w) - if v == w { 1.0 } else { 0.0 };
        }
    }
    let mut pivot_cols = Vec::with_capacity(n);
    let mut row = 0;
    for col in 0..n {
        if row == n {
            break;
        }
        let (best, mag) = (row..n)
            .map(|i| (i, a[i * n + col].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= PIVOT_TOL {
            continue;
        }
        if best != row {
            for j in 0..n {
                a.swap(best * n + j, row * n + j);
            }
        }
        let piv = a[row * n + col];
        for j in col..n {
            a[row * n + j] /= piv;
        }
        for i in 0..n {
            if i != row {
                let f = a[i * n + col];
                if f != 0.0 {
                    for j in col..n {
                        a[i * n + j] -= f * a[row * n + j];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    if pivot_cols.len() != n - 1 {
        return None;
    }
    let free = (0..n).find(|c| !pivot_cols.contains(c))?;
    let mut x = vec![0.0; n];
    x[free] = 1.0;
    for (r, &c) in pivot_cols.iter().enumerate() {
        x[c] = -a[r * n + free];
    }
    let s: f64 = x.iter().sum();
    if s.abs() < PIVOT_TOL {
        return None;
    }
    let mut pi: Vec<f64> = x
        .iter()
        .map(|v| {
            let p = v / s;
            if p < 0.0 && p > -1e-12 {
                0.0
            } else {
                p
            }
        })
        .collect();
    if pi.iter().any(|&p| p < 0.0) {
        return None;
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    Some(pi)
}

/// Period of the recurrent class supporting `pi`.
fn period(m: &TransitionMatrix, pi: &[f64]) -> u64 {
    let support: Vec<bool> = pi.iter().map(|&p| p > 1e-14).collect();
    let Some(start) = support.iter().position(|&s| s) else {
        return 1;
    };
    let mut level = vec![u64::MAX; m.n];
    level[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut g: u64 = 0;
    while let Some(u) = queue.pop_front() {
        for (v, &p) in m.row(u).iter().enumerate() {
            if p <= 0.0 || !support[v] {
                continue;
            }
            if level[v] == u64::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                g = gcd(g, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    if g == 0 {
        // no cycle closed inside the class; only possible for a single absorbing state
        1
    } else {
        g
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Stationary expected utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedUtilities {
    pub per_org: Vec<f64>,
    /// `sum_j pi_j W_j`.
    pub welfare: f64,
}

pub fn expected_utilities(pi: &[f64], cfg: &GameConfig) -> Result<ExpectedUtilities> {
    let n = check_budget(cfg, pi.len() as u64)?;
    if n as usize != pi.len() {
        return Err(Error::param(
            "pi",
            format!("length {} does not match {n} states", pi.len()),
        ));
    }
    let mut per_org = vec![0.0; cfg.n_orgs];
    let mut welfare = 0.0;
    let mut digits = vec![0u32; cfg.n_orgs];
    for &p in pi {
        let y = ActionProfile::from_raw(digits.clone());
        for (i, e) in per_org.iter_mut().enumerate() {
            *e += p * cfg.utility(i, &y);
        }
        welfare += p * cfg.social_welfare(&y);
        increment_digits(&mut digits, cfg.max_rounds);
    }
    Ok(ExpectedUtilities { per_org, welfare })
}

/// `p_hat_j = p^org_{j,0} - [y_org(j) = 0]`, the column of the ZD determinant
/// controlled by `org` alone.
pub fn pinned_column(
    strategy: &ConditionalStrategy,
    org: usize,
    cfg: &GameConfig,
    budget: u64,
) -> Result<Vec<f64>> {
    if org >= cfg.n_orgs {
        return Err(Error::param(
            "org",
            format!("{org} is not below N = {}", cfg.n_orgs),
        ));
    }
    let n = check_budget(cfg, budget)?;
    let table = strategy.dense_rows(cfg, n)?;
    let k = cfg.n_actions();
    Ok((0..n)
        .map(|j| {
            let own = decode_digits(j, cfg.n_orgs, k as u64)[org];
            table[j as usize * k] - if own == 0 { 1.0 } else { 0.0 }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinningReport {
    /// `max_j |p_hat_j - phi (W_j + alpha0)|`.
    pub proportionality_residual: f64,
    /// `|sum_x E^x + alpha0|` under the exact stationary distribution.
    pub welfare_residual: f64,
    pub expected: ExpectedUtilities,
    pub stationary: StationaryResult,
}

/// Checks that `strategies[org]` pins stationary welfare at `-alpha0`.
pub fn verify_pinning(
    strategies: &[ConditionalStrategy],
    org: usize,
    phi: f64,
    alpha0: f64,
    cfg: &GameConfig,
    budget: u64,
) -> Result<PinningReport> {
    let p_hat = pinned_column(&strategies[org], org, cfg, budget)?;
    let welfare = crate::state_space::welfare_vector(cfg, budget)?;
    let proportionality_residual = p_hat
        .iter()
        .zip(&welfare)
        .map(|(p, w)| (p - phi * (w + alpha0)).abs())
        .fold(0.0, f64::max);
    let m = build_markov(strategies, cfg, budget)?;
    let stationary = stationary(&m)?;
    let expected = expected_utilities(&stationary.pi, cfg)?;
    let total: f64 = expected.per_org.iter().sum();
    Ok(PinningReport {
        proportionality_residual,
        welfare_residual: (total + alpha0).abs(),
        expected,
        stationary,
    })
}
