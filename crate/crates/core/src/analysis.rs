//! EE/SE gaps, the symmetric-channel model, tradeoff sweeps and the price
//! of anarchy against an exhaustive centralized search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{run_to_equilibrium, GameConfig, GameTrace};
use crate::net_model::{
    self, log2_1p, power_total_cellular, power_total_d2d, Gains, NetworkInstance, PowerProfile, UeParams,
};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `start, start + step, ..` up to `stop` inclusive, each point computed as
/// `start + j * step` so the grid does not drift.
pub fn sweep_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::invalid(format!("bad sweep {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|j| start + j as f64 * step).collect())
}

pub fn ee_gap_d2d(inst: &NetworkInstance, prof_ee: &PowerProfile, prof_se: &PowerProfile, i: usize) -> Result<f64> {
    Ok(net_model::ee_utility_d2d(inst, prof_ee, i)? - net_model::ee_utility_d2d(inst, prof_se, i)?)
}

pub fn se_gap_d2d(inst: &NetworkInstance, prof_ee: &PowerProfile, prof_se: &PowerProfile, i: usize) -> Result<f64> {
    Ok(net_model::rate_d2d(inst, prof_se, i)? - net_model::rate_d2d(inst, prof_ee, i)?)
}

pub fn ee_gap_cellular(inst: &NetworkInstance, prof_ee: &PowerProfile, prof_se: &PowerProfile, k: usize) -> Result<f64> {
    Ok(net_model::ee_utility_cellular(inst, prof_ee, k)? - net_model::ee_utility_cellular(inst, prof_se, k)?)
}

pub fn se_gap_cellular(inst: &NetworkInstance, prof_ee: &PowerProfile, prof_se: &PowerProfile, k: usize) -> Result<f64> {
    Ok(net_model::rate_cellular(inst, prof_se, k)? - net_model::rate_cellular(inst, prof_ee, k)?)
}

/// Every signal gain is `g`, every interference gain is `I * g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricModel {
    pub g: f64,
    pub i_level: f64,
    pub n: usize,
    pub k: usize,
    pub noise: f64,
    pub d2d: UeParams,
    pub cell: UeParams,
}

impl SymmetricModel {
    pub fn new(g: f64, i_level: f64, n: usize, k: usize, noise: f64, d2d: UeParams, cell: UeParams) -> Result<Self> {
        let model = SymmetricModel {
            g,
            i_level,
            n,
            k,
            noise,
            d2d,
            cell,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::invalid(format!("g must be > 0, got {}", self.g)));
        }
        if !(self.i_level >= 0.0 && self.i_level.is_finite()) {
            return Err(Error::invalid(format!("interference level must be >= 0, got {}", self.i_level)));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if !(self.noise > 0.0) {
            return Err(Error::invalid(format!("noise must be > 0, got {}", self.noise)));
        }
        self.d2d.validate()?;
        self.cell.validate()
    }

    /// Single pair on a single channel with 200 mW budgets, `N0 = 1e-7`,
    /// `eta = 0.35` and no rate floor. The cellular circuit term is 20 mW,
    /// i.e. the 10 mW device figure counted at both link ends.
    pub fn single_link(i_db: f64) -> Self {
        let d2d = UeParams {
            p_max: 0.2,
            r_min: 0.0,
            p_cir: 0.01,
            eta: 0.35,
        };
        let cell = UeParams { p_cir: 0.02, ..d2d };
        SymmetricModel {
            g: 1.0,
            i_level: db_to_linear(i_db),
            n: 1,
            k: 1,
            noise: 1e-7,
            d2d,
            cell,
        }
    }

    pub fn with_i_level(&self, i_level: f64) -> Self {
        SymmetricModel { i_level, ..*self }
    }

    pub fn i_db(&self) -> f64 {
        linear_to_db(self.i_level)
    }

    /// Explicit instance with the symmetric gains, so gap formulas can be
    /// checked against the general model.
    pub fn instance(&self) -> Result<NetworkInstance> {
        self.validate()?;
        let hat = self.i_level * self.g;
        let mut gains = Gains::decoupled(self.n, self.k);
        gains.d2d = vec![vec![self.g; self.k]; self.n];
        gains.cell = vec![self.g; self.k];
        gains.cell_to_d2d = vec![vec![hat; self.n]; self.k];
        for (j, rows) in gains.d2d_cross.iter_mut().enumerate() {
            for (i, row) in rows.iter_mut().enumerate() {
                if i != j {
                    *row = vec![hat; self.k];
                }
            }
        }
        gains.d2d_to_bs = vec![vec![hat; self.k]; self.n];
        NetworkInstance::new(gains, self.noise, vec![self.d2d; self.n], vec![self.cell; self.k])
    }

    /// Profile where every D2D pair puts `p_d` on every channel and every
    /// cellular UE transmits `p_c`.
    pub fn profile(&self, p_d: f64, p_c: f64) -> PowerProfile {
        PowerProfile {
            d2d: vec![vec![p_d; self.k]; self.n],
            cell: vec![p_c; self.k],
        }
    }

    /// D2D rate when every pair uses `p_d` per channel, with `d2d_interferers`
    /// other pairs on each channel.
    fn d2d_rate(&self, p_d: f64, p_c: f64, d2d_interferers: f64) -> f64 {
        let i = self.i_level;
        let denom = p_c * i + d2d_interferers * p_d * i + self.noise / self.g;
        self.k as f64 * log2_1p(net_model::sinr(p_d, denom))
    }

    fn d2d_ee(&self, p_d: f64, p_c: f64, d2d_interferers: f64) -> f64 {
        self.d2d_rate(p_d, p_c, d2d_interferers) / power_total_d2d(&vec![p_d; self.k], &self.d2d)
    }

    /// Cellular rate with `n` D2D interferers at `p_d`.
    pub fn cell_rate(&self, p_c: f64, p_d: f64) -> f64 {
        let denom = self.n as f64 * p_d * self.i_level + self.noise / self.g;
        log2_1p(net_model::sinr(p_c, denom))
    }

    pub fn cell_ee(&self, p_c: f64, p_d: f64) -> f64 {
        self.cell_rate(p_c, p_d) / power_total_cellular(p_c, &self.cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricGaps {
    pub ee_d2d: f64,
    pub se_d2d: f64,
    pub ee_cell: f64,
    pub se_cell: f64,
}

/// Closed-form gaps in the symmetric model. Each D2D receiver hears the
/// cellular UE and the other `N - 1` pairs in both profiles.
pub fn symmetric_gaps(model: &SymmetricModel, p_ee_d: f64, p_ee_c: f64, p_se_d: f64, p_se_c: f64) -> SymmetricGaps {
    let others = model.n.saturating_sub(1) as f64;
    symmetric_gaps_with(model, p_ee_d, p_ee_c, p_se_d, p_se_c, others, others)
}

/// Same closed forms, but with the interferer counts of the published
/// expressions: the reference term of each D2D gap counts `N` interfering
/// pairs instead of `N - 1`. Kept for comparison with published curves.
pub fn symmetric_gaps_as_printed(
    model: &SymmetricModel,
    p_ee_d: f64,
    p_ee_c: f64,
    p_se_d: f64,
    p_se_c: f64,
) -> SymmetricGaps {
    let others = model.n.saturating_sub(1) as f64;
    let all = model.n as f64;
    let leading_ee = model.d2d_ee(p_ee_d, p_ee_c, others) - model.d2d_ee(p_se_d, p_se_c, all);
    let leading_se = model.d2d_rate(p_se_d, p_se_c, others) - model.d2d_rate(p_ee_d, p_ee_c, all);
    let cell = symmetric_gaps_with(model, p_ee_d, p_ee_c, p_se_d, p_se_c, others, others);
    SymmetricGaps {
        ee_d2d: leading_ee,
        se_d2d: leading_se,
        ..cell
    }
}

fn symmetric_gaps_with(
    model: &SymmetricModel,
    p_ee_d: f64,
    p_ee_c: f64,
    p_se_d: f64,
    p_se_c: f64,
    others_ee: f64,
    others_se: f64,
) -> SymmetricGaps {
    SymmetricGaps {
        ee_d2d: model.d2d_ee(p_ee_d, p_ee_c, others_ee) - model.d2d_ee(p_se_d, p_se_c, others_se),
        se_d2d: model.d2d_rate(p_se_d, p_se_c, others_se) - model.d2d_rate(p_ee_d, p_ee_c, others_ee),
        ee_cell: model.cell_ee(p_ee_c, p_ee_d) - model.cell_ee(p_se_c, p_se_d),
        se_cell: model.cell_rate(p_se_c, p_se_d) - model.cell_rate(p_ee_c, p_ee_d),
    }
}

/// Maximizer of a unimodal `f` on `[a, b]`, bracket shrunk below `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let mut best = (0.5 * (lo + hi), f(0.5 * (lo + hi)));
    for x in [a, b] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Smallest cellular power meeting `r_min` with `n` interferers at `p_d`.
fn cell_power_for_rate(model: &SymmetricModel, rate: f64, p_d: f64) -> f64 {
    (rate.exp2() - 1.0) * (model.n as f64 * p_d * model.i_level * model.g + model.noise) / model.g
}

/// EE-optimal cellular power against `n` D2D interferers at `p_d`, by
/// golden-section search over the powers meeting the rate floor.
pub fn symmetric_cell_ee_power(model: &SymmetricModel, p_d: f64) -> Result<f64> {
    let lo = cell_power_for_rate(model, model.cell.r_min, p_d);
    let hi = model.cell.p_max;
    if lo > hi {
        return Err(Error::invalid(format!(
            "cellular rate floor {} unreachable at I = {} dB",
            model.cell.r_min,
            model.i_db()
        )));
    }
    Ok(golden_section_max(|p| model.cell_ee(p, p_d), lo, hi, 1e-9).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub se: f64,
    pub ee: f64,
    pub power: f64,
    pub feasible: bool,
}

/// Cellular EE along a grid of target SE values. Each of the `n` D2D pairs
/// transmits `interferer_power`; the cellular power needed for each target
/// is found by inverting the rate expression.
pub fn tradeoff_curve(model: &SymmetricModel, se_grid: &[f64], interferer_power: f64) -> Result<Vec<TradeoffPoint>> {
    model.validate()?;
    if se_grid.is_empty() {
        return Err(Error::invalid("SE grid is empty"));
    }
    if !(interferer_power >= 0.0) {
        return Err(Error::invalid(format!("interferer power must be >= 0, got {interferer_power}")));
    }
    se_grid
        .iter()
        .map(|&se| {
            if !(se >= 0.0 && se.is_finite()) {
                return Err(Error::invalid(format!("SE target must be >= 0, got {se}")));
            }
            let power = cell_power_for_rate(model, se, interferer_power);
            let ee = se / power_total_cellular(power, &model.cell);
            Ok(TradeoffPoint {
                se,
                ee,
                power,
                feasible: power <= model.cell.p_max * (1.0 + 1e-12),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSummary {
    pub peak_ee: f64,
    pub peak_se: f64,
    pub max_feasible_se: f64,
    pub ee_at_max_se: f64,
    pub feasible_points: usize,
    /// Feasible points whose EE is strictly above the EE at `max_feasible_se`.
    pub beats_max_se: usize,
}

pub fn summarize_tradeoff(points: &[TradeoffPoint]) -> Result<TradeoffSummary> {
    let feasible: Vec<&TradeoffPoint> = points.iter().filter(|p| p.feasible).collect();
    let peak = feasible
        .iter()
        .max_by(|a, b| a.ee.total_cmp(&b.ee))
        .ok_or_else(|| Error::invalid("no feasible tradeoff point"))?;
    let last = feasible
        .iter()
        .max_by(|a, b| a.se.total_cmp(&b.se))
        .expect("nonempty");
    Ok(TradeoffSummary {
        peak_ee: peak.ee,
        peak_se: peak.se,
        max_feasible_se: last.se,
        ee_at_max_se: last.ee,
        feasible_points: feasible.len(),
        beats_max_se: feasible.iter().filter(|p| p.ee > last.ee).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub i_db: f64,
    pub p_ee: f64,
    pub p_se: f64,
    pub g_ee_cell: f64,
    pub g_se_cell: f64,
}

/// Cellular gaps across interference levels (dB). D2D pairs transmit at
/// full power in both profiles; the spectral-efficient cellular UE spends
/// its budget and the energy-efficient one uses its EE-optimal power.
pub fn gap_vs_interference(model: &SymmetricModel, i_grid_db: &[f64]) -> Result<Vec<GapPoint>> {
    model.validate()?;
    let p_d = model.d2d.p_max;
    i_grid_db
        .iter()
        .map(|&i_db| {
            let m = model.with_i_level(db_to_linear(i_db));
            let p_ee = symmetric_cell_ee_power(&m, p_d)?;
            let p_se = m.cell.p_max;
            let gaps = symmetric_gaps(&m, p_d, p_ee, p_d, p_se);
            Ok(GapPoint {
                i_db,
                p_ee,
                p_se,
                g_ee_cell: gaps.ee_cell,
                g_se_cell: gaps.se_cell,
            })
        })
        .collect()
}

/// Dimension limit of [`price_of_anarchy`]'s exhaustive search.
pub const POA_MAX_DIMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaReport {
    pub poa: f64,
    pub optimum_ee: f64,
    pub equilibrium_ee: f64,
    pub optimum: PowerProfile,
    pub equilibrium: PowerProfile,
    /// Every player met its rate floor at the equilibrium.
    pub equilibrium_feasible: bool,
    /// Grid profiles that met every rate floor.
    pub feasible_grid_points: usize,
}

/// Every player's rate floor holds to within `tol` bits/s/Hz.
pub fn qos_satisfied(inst: &NetworkInstance, prof: &PowerProfile, tol: f64) -> Result<bool> {
    for (i, ue) in inst.ue_d2d().iter().enumerate() {
        if net_model::rate_d2d(inst, prof, i)? < ue.r_min - tol {
            return Ok(false);
        }
    }
    for (k, ue) in inst.ue_cell().iter().enumerate() {
        if net_model::rate_cellular(inst, prof, k)? < ue.r_min - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coordinates of a profile flattened as all D2D entries then cellular.
struct Layout {
    n: usize,
    k: usize,
    caps: Vec<f64>,
}

impl Layout {
    fn new(inst: &NetworkInstance) -> Self {
        let (n, k) = (inst.n_d2d(), inst.n_cell());
        let caps = inst
            .ue_d2d()
            .iter()
            .flat_map(|ue| std::iter::repeat(ue.p_max).take(k))
            .chain(inst.ue_cell().iter().map(|ue| ue.p_max))
            .collect();
        Layout { n, k, caps }
    }

    fn dims(&self) -> usize {
        self.n * self.k + self.k
    }

    fn get(&self, prof: &PowerProfile, c: usize) -> f64 {
        if c < self.n * self.k {
            prof.d2d[c / self.k][c % self.k]
        } else {
            prof.cell[c - self.n * self.k]
        }
    }

    fn set(&self, prof: &mut PowerProfile, c: usize, v: f64) {
        if c < self.n * self.k {
            prof.d2d[c / self.k][c % self.k] = v;
        } else {
            prof.cell[c - self.n * self.k] = v;
        }
    }
}

/// Network EE if the profile meets every constraint, otherwise `None`.
fn feasible_value(inst: &NetworkInstance, prof: &PowerProfile) -> Result<Option<f64>> {
    if !prof.is_feasible(inst, 1e-12) || !qos_satisfied(inst, prof, 1e-12)? {
        return Ok(None);
    }
    net_model::network_ee(inst, prof).map(Some)
}

/// Centralized optimum of the network EE over the power grid with
/// `grid_resolution` points per dimension (0 and `p_max` included), over
/// profiles meeting every budget and rate floor. The equilibrium of the
/// configured game is always a candidate and the best point is refined by
/// a pattern search, so the returned ratio is at least 1.
pub fn price_of_anarchy(inst: &NetworkInstance, cfg: &GameConfig, grid_resolution: usize) -> Result<PoaReport> {
    let trace = run_to_equilibrium(inst, cfg)?;
    price_of_anarchy_from(inst, &trace, grid_resolution)
}

/// [`price_of_anarchy`] for an already computed game trace.
pub fn price_of_anarchy_from(inst: &NetworkInstance, trace: &GameTrace, grid_resolution: usize) -> Result<PoaReport> {
    let layout = Layout::new(inst);
    if layout.dims() > POA_MAX_DIMS {
        return Err(Error::TooLarge {
            dims: layout.dims(),
            limit: POA_MAX_DIMS,
            hint: "exhaustive search is exponential in N*K + K; use at most one D2D pair and two channels",
        });
    }
    if grid_resolution < 2 {
        return Err(Error::invalid("grid_resolution must be >= 2"));
    }
    if inst.ue_d2d().iter().chain(inst.ue_cell()).any(|ue| !(ue.p_cir > 0.0)) {
        return Err(Error::invalid("price of anarchy needs positive circuit power for every player"));
    }

    let equilibrium = trace.final_profile().clone();
    let equilibrium_ee = net_model::network_ee(inst, &equilibrium)?;
    if !(equilibrium_ee > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    let equilibrium_feasible = trace.infeasible.is_empty();

    let mut best = equilibrium.clone();
    let mut best_ee = equilibrium_ee;
    let mut feasible_grid_points = 0;

    let levels = grid_resolution - 1;
    let mut idx = vec![0usize; layout.dims()];
    let mut prof = PowerProfile::for_instance(inst);
    'grid: loop {
        for (c, &j) in idx.iter().enumerate() {
            layout.set(&mut prof, c, layout.caps[c] * j as f64 / levels as f64);
        }
        if let Some(v) = feasible_value(inst, &prof)? {
            feasible_grid_points += 1;
            if v > best_ee {
                best_ee = v;
                best.clone_from(&prof);
            }
        }
        for c in (0..idx.len()).rev() {
            if idx[c] < levels {
                idx[c] += 1;
                continue 'grid;
            }
            idx[c] = 0;
        }
        break;
    }

    let (best, best_ee) = pattern_search(inst, &layout, best, best_ee, 1.0 / levels as f64)?;
    Ok(PoaReport {
        poa: best_ee / equilibrium_ee,
        optimum_ee: best_ee,
        equilibrium_ee,
        optimum: best,
        equilibrium,
        equilibrium_feasible,
        feasible_grid_points,
    })
}

/// Compass search on the flattened coordinates with steps relative to each
/// coordinate's budget, halving until `1e-9`.
fn pattern_search(
    inst: &NetworkInstance,
    layout: &Layout,
    mut best: PowerProfile,
    mut best_ee: f64,
    initial: f64,
) -> Result<(PowerProfile, f64)> {
    let mut frac = initial;
    let mut trial = best.clone();
    while frac > 1e-9 {
        let mut improved = false;
        for c in 0..layout.dims() {
            for dir in [1.0, -1.0] {
                let x = layout.get(&best, c);
                let y = (x + dir * frac * layout.caps[c]).clamp(0.0, layout.caps[c]);
                if y == x {
                    continue;
                }
                trial.clone_from(&best);
                layout.set(&mut trial, c, y);
                if let Some(v) = feasible_value(inst, &trial)? {
                    if v > best_ee {
                        best_ee = v;
                        best.clone_from(&trial);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            frac *= 0.5;
        }
    }
    Ok((best, best_ee))
}
