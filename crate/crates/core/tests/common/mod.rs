//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use mmzd::{GameConfig, OrgProfile};
use rand::Rng;

pub fn dilemma4() -> GameConfig {
    GameConfig::new(
        1,
        2,
        100.0,
        100.0,
        vec![OrgProfile::new(50.0, 0.6, 0.05); 4],
    )
    .unwrap()
}

pub fn tiny2() -> GameConfig {
    GameConfig::new(
        1,
        2,
        1.0,
        1.0,
        vec![
            OrgProfile::new(3.0, 0.1, 0.1),
            OrgProfile::new(4.0, 0.2, 0.1),
        ],
    )
    .unwrap()
}

/// Two-organization dilemma whose individual pinning interval is non-empty
/// for moderate `phi`.
pub fn feasible2() -> GameConfig {
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

/// Random small game: `N <= max_n`, `r <= max_r`.
pub fn random_game<R: Rng>(rng: &mut R, max_n: usize, max_r: u32) -> GameConfig {
    let n = rng.random_range(2..=max_n);
    let r = rng.random_range(1..=max_r);
    let k = rng.random_range(1..=4);
    let theta1 = rng.random_range(0.5..50.0);
    let theta0 = theta1 * rng.random_range(0.2..0.9);
    let orgs = (0..n)
        .map(|_| {
            OrgProfile::new(
                rng.random_range(0.5..20.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..0.5),
            )
        })
        .collect();
    GameConfig::new(k, r, theta0, theta1, orgs).unwrap()
}

/// Solo gain of the oracle, `chi0 - chi(y)`.
pub fn solo_gain(cfg: &GameConfig, y: u32) -> f64 {
    cfg.theta0 / cfg.theta1 - cfg.theta0 / (cfg.theta1 + cfg.local_iters as f64 * y as f64)
}

/// Random game in which training alone never pays and full cooperation does.
pub fn random_dilemma<R: Rng>(rng: &mut R, max_n: usize, max_r: u32) -> GameConfig {
    loop {
        let mut cfg = random_game(rng, max_n, max_r);
        let k = cfg.local_iters as f64;
        // smallest cost making solo training unprofitable is m * gain(1) / K
        let g1 = solo_gain(&cfg, 1);
        for o in cfg.orgs.iter_mut() {
            o.iter_cost = o.unit_revenue * g1 / k * rng.random_range(1.01..1.6);
        }
        let solo_ok = cfg.orgs.iter().all(|o| {
            (1..=cfg.max_rounds)
                .all(|y| o.unit_revenue * solo_gain(&cfg, y) < o.iter_cost * k * y as f64)
        });
        let all_r = vec![cfg.max_rounds; cfg.n_orgs];
        if solo_ok && welfare_oracle(&cfg, &all_r) > 0.0 {
            return cfg;
        }
    }
}

pub fn utility_oracle(cfg: &GameConfig, y: &[u32], i: usize) -> f64 {
    let total: u64 = y.iter().map(|&a| a as u64).sum();
    let k = cfg.local_iters as f64;
    let chi = cfg.theta0 / (cfg.theta1 + k * total as f64);
    let o = &cfg.orgs[i];
    o.unit_revenue * (cfg.theta0 / cfg.theta1 - chi) - o.iter_cost * k * y[i] as f64 - o.comm_cost
}

pub fn welfare_oracle(cfg: &GameConfig, y: &[u32]) -> f64 {
    (0..cfg.n_orgs).map(|i| utility_oracle(cfg, y, i)).sum()
}

/// All profiles in state order (first organization most significant).
pub fn all_profiles(n: usize, r: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=r).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn random_row<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot = &top[c];
        for row in rest {
            let f = row[c] / pivot[c];
            for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * p;
            }
        }
    }
    d
}

/// Stationary distribution from the diagonal cofactors of `I - M`
/// (each `pi_j` is proportional to the determinant of `I - M` without row
/// and column `j`). Valid for chains with a single recurrent class.
pub fn stationary_oracle(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let cof: Vec<f64> = (0..n)
        .map(|j| {
            let minor: Vec<Vec<f64>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != j)
                        .map(|c| if r == c { 1.0 } else { 0.0 } - m[r][c])
                        .collect()
                })
                .collect();
            det(minor)
        })
        .collect();
    let s: f64 = cof.iter().sum();
    cof.into_iter().map(|c| c / s).collect()
}

/// Joint chain of independent players: `rows[i][v]` is player `i`'s action
/// distribution after state `v`.
pub fn chain_oracle(rows: &[Vec<Vec<f64>>], profiles: &[Vec<u32>]) -> Vec<Vec<f64>> {
    profiles
        .iter()
        .enumerate()
        .map(|(v, _)| {
            profiles
                .iter()
                .map(|w| {
                    rows.iter()
                        .zip(w)
                        .map(|(player, &a)| player[v][a as usize])
                        .product()
                })
                .collect()
        })
        .collect()
}
