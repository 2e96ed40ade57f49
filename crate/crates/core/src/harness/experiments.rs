//! Tables behind the tradeoff, gap, price-of-anarchy and topology outputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{gap_vs_interference, price_of_anarchy, sweep_grid, tradeoff_curve, GapPoint, SymmetricModel};
use crate::error::{Error, Result};
use crate::game::{GameConfig, Policy};
use crate::harness::scenario::{generate_topology, with_rate_floors, Scenario, ScenarioConfig};

pub const TRADEOFF_I_DB: [f64; 3] = [-20.0, -15.0, -10.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub i_db: f64,
    pub se: f64,
    pub ee: f64,
    pub power: f64,
    pub feasible: bool,
}

pub const TRADEOFF_COLUMNS: [&str; 5] = ["i_db", "se", "ee", "power", "feasible"];

/// Cellular EE against target SE `0..=7` in steps of 0.2 with the D2D
/// interferer at full power, for each interference level.
pub fn tradeoff_table(i_dbs: &[f64]) -> Result<Vec<TradeoffRow>> {
    let grid = sweep_grid(0.0, 7.0, 0.2)?;
    let mut rows = Vec::new();
    for &i_db in i_dbs {
        let model = SymmetricModel::single_link(i_db);
        for p in tradeoff_curve(&model, &grid, model.d2d.p_max)? {
            rows.push(TradeoffRow {
                i_db,
                se: p.se,
                ee: p.ee,
                power: p.power,
                feasible: p.feasible,
            });
        }
    }
    Ok(rows)
}

pub const GAP_COLUMNS: [&str; 5] = ["i_db", "p_ee", "p_se", "g_ee_cell", "g_se_cell"];

/// Cellular gaps for `I` from -30 to -5 dB in 1 dB steps.
pub fn gap_table() -> Result<Vec<GapPoint>> {
    gap_vs_interference(&SymmetricModel::single_link(-20.0), &sweep_grid(-30.0, -5.0, 1.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoaRow {
    pub r_min_d: f64,
    pub r_min_c: f64,
    pub mean_poa: f64,
    pub min_poa: f64,
    pub max_poa: f64,
    pub trials_used: usize,
    /// Trials whose equilibrium missed a rate floor or whose search failed.
    pub excluded: usize,
}

pub const POA_COLUMNS: [&str; 7] = ["r_min_d", "r_min_c", "mean_poa", "min_poa", "max_poa", "trials_used", "excluded"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoaSweep {
    pub r_start: f64,
    pub r_stop: f64,
    pub r_step: f64,
    /// `r_min_c = r_min_d / cell_ratio`.
    pub cell_ratio: f64,
    pub grid_resolution: usize,
}

impl Default for PoaSweep {
    fn default() -> Self {
        PoaSweep {
            r_start: 0.0,
            r_stop: 1.0,
            r_step: 0.1,
            cell_ratio: 5.0,
            grid_resolution: 50,
        }
    }
}

/// Price of anarchy across D2D rate floors. Every sweep point reuses the
/// same topologies; trials with an infeasible equilibrium are left out of
/// that point's statistics.
pub fn poa_table(cfg: &ScenarioConfig, sweep: &PoaSweep) -> Result<Vec<PoaRow>> {
    cfg.validate()?;
    if !(sweep.cell_ratio > 0.0) {
        return Err(Error::invalid("cell_ratio must be > 0"));
    }
    let floors = sweep_grid(sweep.r_start, sweep.r_stop, sweep.r_step)?;
    let mut game = GameConfig::new(Policy::EnergyEfficient);
    game.max_rounds = cfg.max_rounds;

    let per_trial: Vec<Vec<Option<f64>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let base = generate_topology(cfg, &mut cfg.trial_rng(t))?.instance;
            floors
                .iter()
                .map(|&r| {
                    let inst = with_rate_floors(&base, r, r / sweep.cell_ratio)?;
                    match price_of_anarchy(&inst, &game, sweep.grid_resolution) {
                        Ok(rep) if rep.equilibrium_feasible => Ok(Some(rep.poa)),
                        Ok(_) | Err(Error::UndefinedRatio) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(floors
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let vals: Vec<f64> = per_trial.iter().filter_map(|row| row[j]).collect();
            let used = vals.len();
            PoaRow {
                r_min_d: r,
                r_min_c: r / sweep.cell_ratio,
                mean_poa: if used > 0 { vals.iter().sum::<f64>() / used as f64 } else { f64::NAN },
                min_poa: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max_poa: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                trials_used: used,
                excluded: per_trial.len() - used,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRow {
    pub kind: String,
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

pub const TOPOLOGY_COLUMNS: [&str; 4] = ["kind", "index", "x", "y"];

/// Node positions of trial `trial`, BS first.
pub fn topology_table(cfg: &ScenarioConfig, trial: u64) -> Result<Vec<TopologyRow>> {
    let Scenario { topology, .. } = generate_topology(cfg, &mut cfg.trial_rng(trial))?;
    let row = |kind: &str, index: usize, p: &crate::harness::scenario::Point| TopologyRow {
        kind: kind.into(),
        index,
        x: p.x,
        y: p.y,
    };
    let mut rows = vec![TopologyRow {
        kind: "bs".into(),
        index: 0,
        x: 0.0,
        y: 0.0,
    }];
    rows.extend(topology.cellular.iter().enumerate().map(|(i, p)| row("cellular", i, p)));
    rows.extend(topology.d2d_tx.iter().enumerate().map(|(i, p)| row("d2d_tx", i, p)));
    rows.extend(topology.d2d_rx.iter().enumerate().map(|(i, p)| row("d2d_rx", i, p)));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tradeoff_table_layout() {
        let rows = tradeoff_table(&TRADEOFF_I_DB).unwrap();
        assert_eq!(rows.len(), 3 * 36);
        assert!(rows.iter().filter(|r| r.feasible).all(|r| r.power <= 0.2));
    }

    #[test]
    fn gap_table_covers_grid() {
        let rows = gap_table().unwrap();
        assert_eq!(rows.len(), 26);
        assert_eq!(rows[0].i_db, -30.0);
    }

    #[test]
    fn topology_rows() {
        let cfg = ScenarioConfig::default();
        let rows = topology_table(&cfg, 0).unwrap();
        assert_eq!(rows.len(), 1 + 3 + 5 + 5);
        assert_eq!(rows[0].kind, "bs");
    }

    #[test]
    fn poa_rows_small() {
        let cfg = ScenarioConfig {
            n_d2d: 1,
            n_cell: 1,
            trials: 3,
            ..Default::default()
        };
        let sweep = PoaSweep {
            r_stop: 0.2,
            grid_resolution: 10,
            ..Default::default()
        };
        let rows = poa_table(&cfg, &sweep).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.trials_used + r.excluded, 3);
            if r.trials_used > 0 {
                assert!(r.min_poa >= 1.0);
            }
        }
    }
}
