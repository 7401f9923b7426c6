mod common;

use common::*;
use mmzd::zd_core::{
    build_markov, stationary, verify_pinning, ConditionalStrategy, TransitionMatrix,
};
use mmzd::zd_synthesis::{
    complete_strategy, effective_game, synthesize_alliance, synthesize_individual,
};
use mmzd::{ActionProfile, AllianceSpec, GameConfig, OrgProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const B: u64 = 4096;

fn random_rows<R: Rng>(rng: &mut R, n_states: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n_states).map(|_| random_row(rng, k)).collect()
}

/// ZD rows computed from the welfare oracle: `[own = 0] + phi (W + alpha0)`
/// on action 0 and the rest spread uniformly.
fn zd_rows_oracle(cfg: &GameConfig, org: usize, phi: f64, alpha0: f64) -> Vec<Vec<f64>> {
    let r = cfg.max_rounds;
    all_profiles(cfg.n_orgs, r)
        .iter()
        .map(|y| {
            let ind = if y[org] == 0 { 1.0 } else { 0.0 };
            let p0 = ind + phi * (welfare_oracle(cfg, y) + alpha0);
            let mut row = vec![(1.0 - p0) / r as f64; r as usize + 1];
            row[0] = p0;
            row
        })
        .collect()
}

fn expected_welfare_oracle(cfg: &GameConfig, pi: &[f64]) -> f64 {
    all_profiles(cfg.n_orgs, cfg.max_rounds)
        .iter()
        .zip(pi)
        .map(|(y, p)| p * welfare_oracle(cfg, y))
        .sum()
}

#[test]
fn null_space_stationary_matches_cofactor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for cfg in [tiny2(), dilemma4()] {
        let profiles = all_profiles(cfg.n_orgs, cfg.max_rounds);
        let n = profiles.len();
        let k = cfg.n_actions();
        for _ in 0..5 {
            let rows: Vec<Vec<Vec<f64>>> = (0..cfg.n_orgs)
                .map(|_| random_rows(&mut rng, n, k))
                .collect();
            let strategies: Vec<ConditionalStrategy> = rows
                .iter()
                .map(|r| ConditionalStrategy::dense(r.clone()).unwrap())
                .collect();
            let m = build_markov(&strategies, &cfg, B).unwrap();
            let oracle_m = chain_oracle(&rows, &profiles);
            for (v, row) in oracle_m.iter().enumerate() {
                for (w, x) in row.iter().enumerate() {
                    assert!((m.get(v, w) - x).abs() < 1e-15);
                }
            }
            let st = stationary(&m).unwrap();
            assert!(st.unique);
            assert!(st.residual <= 1e-10);
            let oracle = stationary_oracle(&oracle_m);
            for (a, b) in st.pi.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn stationarity_survives_rescaled_rows() {
    // pi^T M = pi^T is a property of M alone; rebuilding the chain from
    // rescaled-then-renormalized rows must leave the solution unchanged.
    let cfg = tiny2();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let profiles = all_profiles(cfg.n_orgs, cfg.max_rounds);
    let rows: Vec<Vec<Vec<f64>>> = (0..2).map(|_| random_rows(&mut rng, 9, 3)).collect();
    let base = TransitionMatrix::from_rows(chain_oracle(&rows, &profiles)).unwrap();
    let scaled: Vec<Vec<Vec<f64>>> = rows
        .iter()
        .map(|p| {
            p.iter()
                .map(|row| {
                    let s: f64 = row.iter().map(|x| 3.7 * x).sum();
                    row.iter().map(|x| 3.7 * x / s).collect()
                })
                .collect()
        })
        .collect();
    let other = TransitionMatrix::from_rows(chain_oracle(&scaled, &profiles)).unwrap();
    let a = stationary(&base).unwrap();
    let b = stationary(&other).unwrap();
    assert!(a.residual <= 1e-10 && b.residual <= 1e-10);
    for (x, y) in a.pi.iter().zip(&b.pi) {
        assert!((x - y).abs() <= 1e-9);
    }
}

#[test]
fn individual_pinning_holds_against_random_opponents() {
    let cfg = feasible2();
    let phi = 0.5;
    let sol = synthesize_individual(&cfg, 0, phi).unwrap();
    assert!(sol.feasible);
    let zd = complete_strategy(&sol, &cfg, B).unwrap();
    let zd_oracle = zd_rows_oracle(&cfg, 0, phi, sol.alpha0_min);
    let profiles = all_profiles(2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let opp = random_rows(&mut rng, 4, 2);
        let strategies = vec![zd.clone(), ConditionalStrategy::dense(opp.clone()).unwrap()];
        let rep = verify_pinning(&strategies, 0, phi, sol.alpha0_min, &cfg, B).unwrap();
        assert!(rep.proportionality_residual <= 1e-12);
        assert!(
            rep.welfare_residual <= 1e-9,
            "residual {}",
            rep.welfare_residual
        );

        let pi = stationary_oracle(&chain_oracle(&[zd_oracle.clone(), opp], &profiles));
        let ew = expected_welfare_oracle(&cfg, &pi);
        assert!((ew + sol.alpha0_min).abs() <= 1e-9, "oracle welfare {ew}");
    }
}

#[test]
fn any_constant_in_the_interval_is_enforced() {
    let cfg = feasible2();
    let sol = synthesize_individual(&cfg, 0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let a0 = sol.alpha0_min + t * (sol.alpha0_max - sol.alpha0_min);
        let s = sol.clone().with_alpha0(a0).unwrap();
        let zd = complete_strategy(&s, &cfg, B).unwrap();
        let opp = ConditionalStrategy::dense(random_rows(&mut rng, 4, 2)).unwrap();
        let rep = verify_pinning(&[zd, opp], 0, 0.5, a0, &cfg, B).unwrap();
        assert!(rep.welfare_residual <= 1e-9);
    }
}

#[test]
fn negative_phi_pinning() {
    // costly first organization: every state where it trains has lower
    // welfare than every state where it abstains
    let cfg = GameConfig::new(
        1,
        1,
        1.0,
        1.0,
        vec![
            OrgProfile::new(1.0, 10.0, 0.05),
            OrgProfile::new(4.0, 2.5, 0.05),
        ],
    )
    .unwrap();
    let phi = -0.1;
    let sol = synthesize_individual(&cfg, 0, phi).unwrap();
    assert!(sol.feasible);
    let zd = complete_strategy(&sol, &cfg, B).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let opp = ConditionalStrategy::dense(random_rows(&mut rng, 4, 2)).unwrap();
        let rep = verify_pinning(&[zd.clone(), opp], 0, phi, sol.alpha0_min, &cfg, B).unwrap();
        assert!(rep.welfare_residual <= 1e-9);
    }
}

#[test]
fn alliance_pinning_holds_on_the_reduced_game() {
    let cfg = dilemma4();
    let phi = 0.01;
    let alliance = AllianceSpec::new(vec![0, 1, 2], 0, &cfg).unwrap();
    let sol = synthesize_alliance(&cfg, &alliance, phi).unwrap();
    assert!(sol.feasible);
    let game = effective_game(&cfg, &alliance).unwrap();
    assert_eq!(game.players(), &[0, 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        // outsider rule keyed by the full previous profile
        let table = random_rows(&mut rng, 81, 3);
        let rule = move |y: &ActionProfile| {
            let idx = y
                .as_slice()
                .iter()
                .fold(0usize, |acc, &a| acc * 3 + a as usize);
            table[idx].clone()
        };
        let rep = game.verify_pinning(&sol, &[&rule], B).unwrap();
        assert!(rep.proportionality_residual <= 1e-12);
        assert!(
            rep.welfare_residual <= 1e-9,
            "residual {}",
            rep.welfare_residual
        );

        // oracle on the reduced chain (alliance action a, outsider action b)
        let reduced = all_profiles(2, 2);
        let full: Vec<Vec<u32>> = reduced
            .iter()
            .map(|s| vec![s[0], s[0], s[0], s[1]])
            .collect();
        let zd_rows: Vec<Vec<f64>> = full
            .iter()
            .map(|y| {
                let ind = if y[0] == 0 { 1.0 } else { 0.0 };
                let p0 = ind + phi * (welfare_oracle(&cfg, y) + sol.alpha0_min);
                vec![p0, (1.0 - p0) / 2.0, (1.0 - p0) / 2.0]
            })
            .collect();
        let out_rows: Vec<Vec<f64>> = full
            .iter()
            .map(|y| rule(&ActionProfile::new(y.clone(), &cfg).unwrap()))
            .collect();
        let pi = stationary_oracle(&chain_oracle(&[zd_rows, out_rows], &reduced));
        let ew: f64 = full
            .iter()
            .zip(&pi)
            .map(|(y, p)| p * welfare_oracle(&cfg, y))
            .sum();
        assert!((ew + sol.alpha0_min).abs() <= 1e-9);
    }
}
