//! Monte Carlo campaign over random topologies: one game per policy per
//! trial, aggregated per round.

use std::fmt;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{run_to_equilibrium, GameConfig, GameTrace, Policy};
use crate::harness::scenario::{generate_topology, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EeD2d,
    EeCell,
    SeD2d,
    SeCell,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::EeD2d, Metric::EeCell, Metric::SeD2d, Metric::SeCell];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::EeD2d => "ee_d2d",
            Metric::EeCell => "ee_cell",
            Metric::SeD2d => "se_d2d",
            Metric::SeCell => "se_cell",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-link averages of one round within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMeans {
    pub ee_d2d: f64,
    pub ee_cell: f64,
    pub se_d2d: f64,
    pub se_cell: f64,
}

impl RoundMeans {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::EeD2d => self.ee_d2d,
            Metric::EeCell => self.ee_cell,
            Metric::SeD2d => self.se_d2d,
            Metric::SeCell => self.se_cell,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrial {
    pub policy: Policy,
    pub rounds_to_converge: usize,
    pub converged: bool,
    /// Players that could not meet their rate floor in the last round.
    pub infeasible_players: usize,
    /// One entry per round up to `max_rounds`; a game that settled early
    /// repeats its final state.
    pub series: Vec<RoundMeans>,
}

impl PolicyTrial {
    fn from_trace(trace: &GameTrace, max_rounds: usize) -> Self {
        let mut series: Vec<RoundMeans> = trace
            .rounds
            .iter()
            .map(|r| RoundMeans {
                ee_d2d: mean(&r.ee_d2d),
                ee_cell: mean(&r.ee_cell),
                se_d2d: mean(&r.se_d2d),
                se_cell: mean(&r.se_cell),
            })
            .collect();
        let last = *series.last().expect("a game plays at least one round");
        series.resize(max_rounds, last);
        PolicyTrial {
            policy: trace.policy,
            rounds_to_converge: trace.rounds_to_converge,
            converged: trace.converged,
            infeasible_players: trace.infeasible.len(),
            series,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    /// Master seed; with `trial` it identifies the random stream.
    pub seed: u64,
    pub policies: Vec<PolicyTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: Policy,
    pub round: usize,
    pub metric: Metric,
    pub mean: f64,
    pub normalized_mean: f64,
    pub trials: usize,
}

pub const RESULT_COLUMNS: [&str; 6] = ["policy", "round", "metric", "mean", "normalized_mean", "trials"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub policy: Policy,
    pub trials: usize,
    pub converged: usize,
    pub mean_rounds: f64,
    pub max_rounds: usize,
}

pub const CONVERGENCE_COLUMNS: [&str; 5] = ["policy", "trials", "converged", "mean_rounds", "max_rounds"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub rows: Vec<ResultRow>,
    pub convergence: Vec<ConvergenceRow>,
    pub trials: Vec<TrialResult>,
}

impl CampaignResult {
    pub fn row(&self, policy: Policy, round: usize, metric: Metric) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.round == round && r.metric == metric)
    }

    /// Mean of `metric` in the last round.
    pub fn final_mean(&self, policy: Policy, metric: Metric) -> Option<f64> {
        let last = self.rows.iter().filter(|r| r.policy == policy).map(|r| r.round).max()?;
        self.row(policy, last, metric).map(|r| r.mean)
    }

    /// Share of trials whose `policy` game settled within `rounds` rounds.
    pub fn converged_within(&self, policy: Policy, rounds: usize) -> f64 {
        let hits = self
            .trials
            .iter()
            .filter_map(|t| t.policies.iter().find(|p| p.policy == policy))
            .filter(|p| p.converged && p.rounds_to_converge <= rounds)
            .count();
        hits as f64 / self.trials.len().max(1) as f64
    }
}

fn policy_seed(game_seed: u64, policy: Policy) -> u64 {
    let slot = Policy::ALL.iter().position(|&p| p == policy).expect("listed") as u64;
    game_seed.wrapping_add(slot)
}

/// One topology and one game per policy, all on the same instance.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64, policies: &[Policy]) -> Result<TrialResult> {
    let mut rng = cfg.trial_rng(trial);
    let scenario = generate_topology(cfg, &mut rng)?;
    let game_seed = rng.next_u64();
    let policies = policies
        .iter()
        .map(|&policy| {
            let mut game = GameConfig::new(policy);
            game.max_rounds = cfg.max_rounds;
            game.rng_seed = policy_seed(game_seed, policy);
            let trace = run_to_equilibrium(&scenario.instance, &game)?;
            Ok(PolicyTrial::from_trace(&trace, cfg.max_rounds))
        })
        .collect::<Result<_>>()?;
    Ok(TrialResult {
        trial,
        seed: cfg.seed,
        policies,
    })
}

/// Runs every trial in parallel and reduces them in trial order, so the
/// output does not depend on the thread count. Normalization divides each
/// metric by its largest mean over all policies and rounds.
pub fn run_campaign(cfg: &ScenarioConfig, policies: &[Policy]) -> Result<CampaignResult> {
    cfg.validate()?;
    let trials: Vec<TrialResult> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, policies))
        .collect::<Result<_>>()?;
    Ok(aggregate(cfg.max_rounds, policies, trials))
}

fn aggregate(max_rounds: usize, policies: &[Policy], trials: Vec<TrialResult>) -> CampaignResult {
    let n = trials.len();
    let mut rows = Vec::with_capacity(policies.len() * max_rounds * Metric::ALL.len());
    for (slot, &policy) in policies.iter().enumerate() {
        for round in 0..max_rounds {
            for metric in Metric::ALL {
                let sum: f64 = trials.iter().map(|t| t.policies[slot].series[round].get(metric)).sum();
                rows.push(ResultRow {
                    policy,
                    round: round + 1,
                    metric,
                    mean: sum / n.max(1) as f64,
                    normalized_mean: 0.0,
                    trials: n,
                });
            }
        }
    }
    for metric in Metric::ALL {
        let peak = rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.mean)
            .fold(f64::NEG_INFINITY, f64::max);
        for r in rows.iter_mut().filter(|r| r.metric == metric) {
            r.normalized_mean = if peak > 0.0 { r.mean / peak } else { 0.0 };
        }
    }

    let convergence = policies
        .iter()
        .enumerate()
        .map(|(slot, &policy)| {
            let runs: Vec<&PolicyTrial> = trials.iter().map(|t| &t.policies[slot]).collect();
            ConvergenceRow {
                policy,
                trials: n,
                converged: runs.iter().filter(|p| p.converged).count(),
                mean_rounds: runs.iter().map(|p| p.rounds_to_converge as f64).sum::<f64>() / n.max(1) as f64,
                max_rounds: runs.iter().map(|p| p.rounds_to_converge).max().unwrap_or(0),
            }
        })
        .collect();

    CampaignResult {
        rows,
        convergence,
        trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            trials: 4,
            n_d2d: 2,
            n_cell: 2,
            max_rounds: 8,
            ..Default::default()
        }
    }

    #[test]
    fn campaign_shape_and_normalization() {
        let cfg = small();
        let res = run_campaign(&cfg, &Policy::ALL).unwrap();
        assert_eq!(res.rows.len(), 3 * 8 * 4);
        for metric in Metric::ALL {
            let peak = res
                .rows
                .iter()
                .filter(|r| r.metric == metric)
                .map(|r| r.normalized_mean)
                .fold(0.0, f64::max);
            assert_eq!(peak, 1.0);
        }
        assert!(res.rows.iter().all(|r| r.mean.is_finite() && r.trials == 4));
        assert_eq!(res.convergence.len(), 3);
        assert!(res.convergence.iter().all(|c| c.max_rounds <= 8));
        assert!(res.final_mean(Policy::Random, Metric::EeD2d).is_some());
    }

    #[test]
    fn single_trial_reproducible() {
        let cfg = ScenarioConfig {
            trials: 1,
            ..small()
        };
        let a = run_campaign(&cfg, &Policy::ALL).unwrap();
        let b = run_campaign(&cfg, &Policy::ALL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_subset_keeps_per_policy_streams() {
        let cfg = small();
        let all = run_trial(&cfg, 2, &Policy::ALL).unwrap();
        let only = run_trial(&cfg, 2, &[Policy::Random]).unwrap();
        assert_eq!(all.policies[2], only.policies[0]);
    }
}
