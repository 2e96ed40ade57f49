//! Spectral-efficiency baseline: each player maximizes its own rate under
//! the same constraints, ignoring power cost. Same water-filling and dual
//! machinery as the energy solver, without the Dinkelbach loop.

use crate::ee_solver::{check_multipliers, dual_ascent_core, single_channel, DualConfig, LevelRule, LinkProblem, SolverReport};
use crate::error::Result;

/// `[(1 + alpha) log2 e / beta - floor_k]^+` per channel.
pub fn waterfill_se_d2d(prob: &LinkProblem, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check_multipliers(0.0, alpha, beta)?;
    let level = LevelRule::Spectral.level(prob.params().eta, alpha, beta)?;
    Ok(prob.fill(level))
}

/// Single-channel analogue with rate multiplier `delta` and budget
/// multiplier `theta`.
pub fn waterfill_se_cellular(prob: &LinkProblem, delta: f64, theta: f64) -> Result<f64> {
    single_channel(prob)?;
    Ok(waterfill_se_d2d(prob, delta, theta)?[0])
}

/// Rate-maximizing allocation. On one channel the budget is always spent in
/// full, so that case skips the dual iteration.
pub fn solve_se(prob: &LinkProblem, cfg: &DualConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let r_min = prob.params().r_min;
    let (powers, inner_iters, feasible) = if prob.channels() == 1 {
        let powers = if prob.has_usable_channel() {
            vec![prob.params().p_max]
        } else {
            vec![0.0]
        };
        let feasible = prob.rate(&powers) >= r_min;
        (powers, 0, feasible)
    } else {
        let out = dual_ascent_core(prob, LevelRule::Spectral, cfg)?;
        (out.powers, out.iters, out.feasible)
    };
    let rate = prob.rate(&powers);
    Ok(SolverReport {
        powers,
        q_star: rate,
        subtractive_residual: 0.0,
        outer_iters: 1,
        inner_iters,
        feasible,
        converged: true,
        q_trace: vec![rate],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ee_solver::InterferenceView;
    use crate::error::Error;
    use crate::net_model::UeParams;
    use approx::assert_relative_eq;
    use std::f64::consts::LOG2_E;

    fn params(p_max: f64, r_min: f64) -> UeParams {
        UeParams::new(p_max, r_min, 0.01, 0.35).unwrap()
    }

    #[test]
    fn waterfill_se_formula() {
        let view = InterferenceView::new(vec![0.0, 3.0], 0.1).unwrap();
        let prob = LinkProblem::d2d(view, vec![1.0, 1.0], params(1.0, 0.0)).unwrap();
        let p = waterfill_se_d2d(&prob, 0.0, 1.0).unwrap();
        assert_relative_eq!(p[0], LOG2_E - 0.1, max_relative = 1e-12);
        assert_eq!(p[1], 0.0);
        assert!(matches!(waterfill_se_d2d(&prob, 0.0, 0.0), Err(Error::InfiniteWaterLevel(_))));
        let cell = LinkProblem::cellular(InterferenceView::interference_free(1, 0.1), 1.0, params(1.0, 0.0)).unwrap();
        assert!(waterfill_se_cellular(&cell, 0.0, 0.0).is_err());
        assert_relative_eq!(waterfill_se_cellular(&cell, 1.0, 2.0).unwrap(), LOG2_E - 0.1, max_relative = 1e-12);
    }

    #[test]
    fn single_channel_spends_budget() {
        let prob = LinkProblem::d2d(InterferenceView::interference_free(1, 0.1), vec![1.0], params(0.2, 0.0)).unwrap();
        let rep = solve_se(&prob, &DualConfig::default()).unwrap();
        assert_eq!(rep.powers, vec![0.2]);
        assert_eq!(rep.inner_iters, 0);

        let loud = InterferenceView::new(vec![1e3], 1e-7).unwrap();
        let cell = LinkProblem::cellular(loud, 1.0, params(0.2, 0.0)).unwrap();
        assert_eq!(solve_se(&cell, &DualConfig::default()).unwrap().powers, vec![0.2]);
    }

    #[test]
    fn cellular_se_under_d2d_interference() {
        // D2D at 0.2 W into a 0.01 gain.
        let view = InterferenceView::new(vec![0.2 * 0.01], 1e-7).unwrap();
        let cell = LinkProblem::cellular(view, 1.0, params(0.2, 0.0)).unwrap();
        let rep = solve_se(&cell, &DualConfig::default()).unwrap();
        assert_relative_eq!(rep.q_star, (1.0 + 0.2 / 0.0020001f64).log2(), max_relative = 1e-12);
        assert_relative_eq!(rep.q_star, 6.658, max_relative = 1e-4);
    }

    #[test]
    fn symmetric_channels_split_evenly() {
        let prob = LinkProblem::d2d(InterferenceView::interference_free(2, 0.1), vec![1.0, 1.0], params(0.2, 0.0)).unwrap();
        let rep = solve_se(&prob, &DualConfig::default()).unwrap();
        assert_relative_eq!(rep.powers[0], 0.1, max_relative = 1e-9);
        assert_relative_eq!(rep.powers[1], 0.1, max_relative = 1e-9);
    }

    #[test]
    fn infeasible_requirement_flags() {
        let prob = LinkProblem::d2d(InterferenceView::interference_free(2, 0.1), vec![1.0, 1.0], params(0.2, 50.0)).unwrap();
        let rep = solve_se(&prob, &DualConfig::default()).unwrap();
        assert!(!rep.feasible);
        assert_relative_eq!(rep.powers.iter().sum::<f64>(), 0.2, max_relative = 1e-12);
        let single = LinkProblem::d2d(InterferenceView::interference_free(1, 0.1), vec![1.0], params(0.2, 50.0)).unwrap();
        assert!(!solve_se(&single, &DualConfig::default()).unwrap().feasible);
    }
}
