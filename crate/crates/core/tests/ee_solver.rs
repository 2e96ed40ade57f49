use d2d_eegame::ee_solver::*;
use d2d_eegame::net_model::UeParams;
use proptest::prelude::*;
use std::f64::consts::LOG2_E;

fn ternary_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Best EE by exhaustive search over the total spent power, with the
/// rate-optimal split of that total found by ternary search.
fn oracle_ee(prob: &LinkProblem) -> f64 {
    let p_max = prob.params().p_max;
    let best_split = |s: f64| -> f64 {
        if prob.channels() == 1 {
            return prob.rate(&[s]);
        }
        ternary_max(|a| prob.rate(&[a, s - a]), 0.0, s).1
    };
    let ee = |s: f64| best_split(s) / (s / prob.params().eta + prob.circuit());
    let n: usize = 2000;
    let (j, _) = (0..=n)
        .map(|j| (j, ee(p_max * j as f64 / n as f64)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let lo = p_max * (j.saturating_sub(1)) as f64 / n as f64;
    let hi = p_max * (j + 1).min(n) as f64 / n as f64;
    ternary_max(ee, lo, hi).1
}

fn problem(k: usize, floors: &[f64], p_max: f64, p_cir: f64, eta: f64) -> LinkProblem {
    let noise = 1e-9;
    let view = InterferenceView::new(floors.iter().map(|f| f - noise).collect(), noise).unwrap();
    let params = UeParams::new(p_max, 0.0, p_cir, eta).unwrap();
    LinkProblem::d2d(view, vec![1.0; k], params).unwrap()
}

fn arb_problem() -> impl Strategy<Value = LinkProblem> {
    (1usize..=2, 0.05f64..1.0, prop::collection::vec(-2.0f64..0.5, 2), 0.001f64..0.1, 0.2f64..1.0).prop_map(
        |(k, p_max, lf, p_cir, eta)| {
            let floors: Vec<f64> = lf[..k].iter().map(|e| p_max * 10f64.powf(*e)).collect();
            problem(k, &floors, p_max, p_cir, eta)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dinkelbach_matches_oracle(prob in arb_problem()) {
        let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
        let best = oracle_ee(&prob);
        prop_assert!(rep.feasible);
        prop_assert!((rep.q_star - best).abs() <= 1e-3 * best, "{} vs {}", rep.q_star, best);
        prop_assert!(rep.powers.iter().sum::<f64>() <= prob.params().p_max * (1.0 + 1e-9));
    }

    #[test]
    fn q_trace_increases(prob in arb_problem()) {
        let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
        prop_assert!(rep.q_trace.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(rep.converged);
        prop_assert!(rep.subtractive_residual <= 1e-3);
    }

    #[test]
    fn solution_is_a_water_filling(prob in arb_problem()) {
        let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
        let floors = prob.floors();
        let active: Vec<usize> = (0..prob.channels()).filter(|&k| rep.powers[k] > 1e-12).collect();
        prop_assert!(!active.is_empty());
        let level = floors[active[0]] + rep.powers[active[0]];
        for k in 0..prob.channels() {
            if rep.powers[k] > 1e-12 {
                prop_assert!((floors[k] + rep.powers[k] - level).abs() <= 1e-9 * level);
            } else {
                prop_assert!(floors[k] >= level * (1.0 - 1e-9));
            }
        }
        // With the budget slack the level is set by the price alone.
        if rep.powers.iter().sum::<f64>() < prob.params().p_max * (1.0 - 1e-6) {
            let free = prob.params().eta * LOG2_E / rep.q_trace[rep.q_trace.len() - 1];
            prop_assert!((level - free).abs() <= 1e-2 * free, "{level} vs {free}");
        }
    }

    #[test]
    fn subtractive_value_is_convex_and_decreasing(prob in arb_problem(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let q_star = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap().q_star;
        let (lo, hi) = (2.0 * q_star * a.min(b), 2.0 * q_star * a.max(b));
        let cfg = DualConfig::default();
        let (f_lo, f_hi) = (f_of_q(&prob, lo, &cfg).unwrap(), f_of_q(&prob, hi, &cfg).unwrap());
        let f_mid = f_of_q(&prob, 0.5 * (lo + hi), &cfg).unwrap();
        let slack = 1e-9 * (1.0 + f_lo.abs());
        prop_assert!(f_hi <= f_lo + slack);
        prop_assert!(f_mid <= 0.5 * (f_lo + f_hi) + slack);
        prop_assert!(f_of_q(&prob, 0.0, &cfg).unwrap() >= 0.0);
    }

    #[test]
    fn energy_allocation_below_rate_allocation(prob in arb_problem()) {
        let ee = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
        let se = prob.max_rate_allocation();
        for k in 0..prob.channels() {
            prop_assert!(ee.powers[k] <= se[k] + 1e-9 * prob.params().p_max);
        }
        prop_assert!(prob.rate(&ee.powers) <= prob.rate(&se) + 1e-9);
    }
}

#[test]
fn binding_floor_is_met() {
    let mut prob = problem(2, &[0.01, 0.02], 0.5, 0.01, 0.35);
    let free = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
    let r_free = prob.rate(&free.powers);
    let params = UeParams::new(0.5, r_free + 1.0, 0.01, 0.35).unwrap();
    prob = LinkProblem::d2d(prob.view().clone(), prob.gains().to_vec(), params).unwrap();
    let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
    assert!(rep.feasible);
    assert!(prob.rate(&rep.powers) >= r_free + 1.0 - 1e-6);
    assert!(rep.q_star < free.q_star);
}

#[test]
fn unreachable_floor_reports_infeasible() {
    let view = InterferenceView::interference_free(1, 0.1);
    let params = UeParams::new(0.1, 50.0, 0.01, 0.35).unwrap();
    let prob = LinkProblem::cellular(view, 1.0, params).unwrap();
    let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
    assert!(!rep.feasible);
    assert_eq!(rep.powers, vec![0.1]);
}

#[test]
fn floor_far_above_budget_stays_in_budget() {
    let view = InterferenceView::new(vec![7.969e-5], 1e-9).unwrap();
    let params = UeParams::new(0.2, 0.0, 0.01, 0.35).unwrap();
    let prob = LinkProblem::cellular(view, 5.184e-8, params).unwrap();
    let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default()).unwrap();
    assert!(rep.powers[0] <= 0.2);
    let best = oracle_ee(&prob);
    assert!((rep.q_star - best).abs() <= 1e-3 * best, "{} vs {best}", rep.q_star);
}
