mod common;

use common::{decoupled_instance, random_instance, ue};
use d2d_eegame::game::*;
use d2d_eegame::net_model::*;
use proptest::prelude::*;

/// Argmax of a unimodal function on `[0, hi]`: coarse scan, then ternary
/// refinement around the best sample.
fn scan_max(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let n: usize = 4000;
    let j = (0..=n)
        .map(|j| (j, f(hi * j as f64 / n as f64)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    let (mut lo, mut up) = (hi * j.saturating_sub(1) as f64 / n as f64, hi * (j + 1).min(n) as f64 / n as f64);
    for _ in 0..200 {
        let a = lo + (up - lo) / 3.0;
        let b = up - (up - lo) / 3.0;
        if f(a) < f(b) {
            lo = a;
        } else {
            up = b;
        }
    }
    0.5 * (lo + up)
}

/// One pair and one cellular UE sharing a channel, both directions coupled.
fn coupled_pair(cross: f64, leak: f64) -> NetworkInstance {
    let g = Gains {
        d2d: vec![vec![1e-3]],
        cell: vec![1e-5],
        cell_to_d2d: vec![vec![cross]],
        d2d_cross: vec![vec![vec![0.0]]],
        d2d_to_bs: vec![vec![leak]],
    };
    let p = ue(0.2, 0.0, 0.01, 0.35);
    NetworkInstance::new(g, 1e-7, vec![p], vec![p]).unwrap()
}

/// Alternating best responses with scan-based maximization.
fn oracle_fixed_point(inst: &NetworkInstance) -> PowerProfile {
    let mut prof = PowerProfile::for_instance(inst);
    for _ in 0..100 {
        let before = prof.clone();
        let d = scan_max(
            |p| {
                let mut t = prof.clone();
                t.d2d[0][0] = p;
                ee_utility_d2d(inst, &t, 0).unwrap()
            },
            0.2,
        );
        prof.d2d[0][0] = d;
        let c = scan_max(
            |p| {
                let mut t = prof.clone();
                t.cell[0] = p;
                ee_utility_cellular(inst, &t, 0).unwrap()
            },
            0.2,
        );
        prof.cell[0] = c;
        if prof.max_abs_diff(&before) < 1e-12 {
            break;
        }
    }
    prof
}

#[test]
fn single_pair_equilibrium_matches_alternating_oracle() {
    for (cross, leak) in [(1e-6, 1e-6), (1e-5, 1e-7), (3e-7, 2e-6)] {
        let inst = coupled_pair(cross, leak);
        let trace = run_to_equilibrium(&inst, &GameConfig::new(Policy::EnergyEfficient)).unwrap();
        assert!(trace.converged);
        let got = trace.final_profile();
        let want = oracle_fixed_point(&inst);
        for (a, b) in [(got.d2d[0][0], want.d2d[0][0]), (got.cell[0], want.cell[0])] {
            assert!((a - b).abs() <= 2e-2 * b, "{a} vs {b}");
        }
        let (u, v) = (ee_utility_d2d(&inst, got, 0).unwrap(), ee_utility_d2d(&inst, &want, 0).unwrap());
        assert!((u - v).abs() <= 1e-3 * v);
        let (u, v) = (ee_utility_cellular(&inst, got, 0).unwrap(), ee_utility_cellular(&inst, &want, 0).unwrap());
        assert!((u - v).abs() <= 1e-3 * v);
    }
}

#[test]
fn games_are_deterministic() {
    let inst = random_instance(11, 3, 2);
    for policy in Policy::ALL {
        let mut cfg = GameConfig::new(policy);
        cfg.rng_seed = 5;
        assert_eq!(run_to_equilibrium(&inst, &cfg).unwrap(), run_to_equilibrium(&inst, &cfg).unwrap());
    }
}

#[test]
fn random_seed_changes_random_policy() {
    let inst = random_instance(11, 3, 2);
    let mut cfg = GameConfig::new(Policy::Random);
    let a = run_to_equilibrium(&inst, &cfg).unwrap();
    cfg.rng_seed = 1;
    let b = run_to_equilibrium(&inst, &cfg).unwrap();
    assert_ne!(a.final_profile(), b.final_profile());
    assert_eq!(a.rounds.len(), cfg.max_rounds);
}

#[test]
fn forced_silence_shows_a_gain() {
    let inst = decoupled_instance(2, 2, 2);
    let trace = run_to_equilibrium(&inst, &GameConfig::new(Policy::EnergyEfficient)).unwrap();
    let mut prof = trace.final_profile().clone();
    let ok = verify_equilibrium(&inst, &prof, Utility::Energy, 1e-3).unwrap();
    assert!(ok.max_rel_gain() <= 1e-2);
    prof.cell[1] = 0.0;
    let bad = verify_equilibrium(&inst, &prof, Utility::Energy, 1e-3).unwrap();
    assert!(bad.max_abs_gain() > 0.0);
}

#[test]
fn bad_order_is_rejected() {
    let inst = random_instance(1, 2, 1);
    let mut cfg = GameConfig::new(Policy::EnergyEfficient);
    cfg.update_order = vec![Player::D2d(0), Player::D2d(0), Player::Cellular(0)];
    assert!(run_to_equilibrium(&inst, &cfg).is_err());
    cfg.update_order.clear();
    cfg.max_rounds = 0;
    assert!(run_to_equilibrium(&inst, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn order_does_not_matter_when_decoupled(seed in any::<u64>(), n in 1usize..4, k in 1usize..3, policy in 0usize..2) {
        let inst = decoupled_instance(seed, n, k);
        let mut cfg = GameConfig::new(Policy::ALL[policy]);
        let base = run_to_equilibrium(&inst, &cfg).unwrap();
        let mut order = default_order(&inst);
        order.reverse();
        cfg.update_order = order;
        let flipped = run_to_equilibrium(&inst, &cfg).unwrap();
        prop_assert_eq!(base.final_profile(), flipped.final_profile());
        prop_assert!(base.converged && base.rounds_to_converge <= 2);
    }

    #[test]
    fn every_round_respects_budgets(seed in any::<u64>(), n in 1usize..4, k in 1usize..3, policy in 0usize..3) {
        let inst = random_instance(seed, n, k);
        let mut cfg = GameConfig::new(Policy::ALL[policy]);
        cfg.max_rounds = 5;
        cfg.rng_seed = seed;
        let trace = run_to_equilibrium(&inst, &cfg).unwrap();
        for r in &trace.rounds {
            prop_assert!(r.profile.is_feasible(&inst, 1e-9));
            prop_assert!(r.ee_d2d.iter().chain(&r.ee_cell).all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn spectral_policy_spends_budget_when_decoupled(seed in any::<u64>(), n in 1usize..4, k in 1usize..3) {
        let inst = decoupled_instance(seed, n, k);
        let trace = run_to_equilibrium(&inst, &GameConfig::new(Policy::SpectralEfficient)).unwrap();
        let prof = trace.final_profile();
        for row in &prof.d2d {
            prop_assert!((row.iter().sum::<f64>() - 0.2).abs() <= 1e-9);
        }
        for &p in &prof.cell {
            prop_assert!((p - 0.2).abs() <= 1e-12);
        }
    }
}
