//! Per-player energy-efficiency maximization.
//!
//! A player maximizes `rate / total_power` subject to a minimum rate and a
//! transmit-power budget, with the rest of the network frozen into an
//! [`InterferenceView`]. The ratio is handled by the Dinkelbach iteration:
//! for a fixed price `q` the subtractive problem `rate - q * total_power`
//! is concave and is solved by water-filling, with the two Lagrange
//! multipliers found by projected dual gradient steps. `q` is then updated
//! to the achieved ratio until the subtractive optimum drops below the
//! tolerance.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::{log2_1p, sinr, UeParams};

/// Value reported for the rate multiplier when the rate requirement cannot
/// be met at full power.
pub const ALPHA_CAP: f64 = 1e6;

/// Relative slack on the power budget and absolute slack (bits/s/Hz) on the
/// rate requirement that the dual iteration drives its primal iterate to.
const PRIMAL_TOL: f64 = 1e-10;

/// Aggregate interference a player measures on each of its channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceView {
    /// Interference power per channel, watts (noise excluded).
    pub interference: Vec<f64>,
    /// Noise power, watts.
    pub noise: f64,
}

impl InterferenceView {
    pub fn new(interference: Vec<f64>, noise: f64) -> Result<Self> {
        if interference.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("interference must be finite and >= 0"));
        }
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::invalid(format!("noise must be >= 0, got {noise}")));
        }
        Ok(InterferenceView { interference, noise })
    }

    pub fn interference_free(channels: usize, noise: f64) -> Self {
        InterferenceView {
            interference: vec![0.0; channels],
            noise,
        }
    }
}

/// One player's optimization problem with everybody else frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkProblem {
    gains: Vec<f64>,
    view: InterferenceView,
    params: UeParams,
    circuit: f64,
}

impl LinkProblem {
    /// A D2D pair: circuit power is paid at transmitter and receiver.
    pub fn d2d(view: InterferenceView, gains: Vec<f64>, params: UeParams) -> Result<Self> {
        let circuit = 2.0 * params.p_cir;
        Self::with_circuit(view, gains, params, circuit)
    }

    /// A cellular UE on its single channel.
    pub fn cellular(view: InterferenceView, gain: f64, params: UeParams) -> Result<Self> {
        Self::with_circuit(view, vec![gain], params, params.p_cir)
    }

    /// Explicit constant power term `circuit` (watts) in the denominator.
    ///
    /// Gains may be zero here: such a channel can never carry power.
    pub fn with_circuit(view: InterferenceView, gains: Vec<f64>, params: UeParams, circuit: f64) -> Result<Self> {
        params.validate()?;
        if gains.is_empty() {
            return Err(Error::Dimension("a link needs at least one channel".into()));
        }
        if gains.len() != view.interference.len() {
            return Err(Error::Dimension(format!(
                "{} gains but {} interference entries",
                gains.len(),
                view.interference.len()
            )));
        }
        if gains.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::invalid("link gains must be finite and >= 0"));
        }
        if !(circuit >= 0.0 && circuit.is_finite()) {
            return Err(Error::invalid(format!("circuit power must be >= 0, got {circuit}")));
        }
        Ok(LinkProblem {
            gains,
            view,
            params,
            circuit,
        })
    }

    pub fn channels(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn view(&self) -> &InterferenceView {
        &self.view
    }

    pub fn params(&self) -> &UeParams {
        &self.params
    }

    pub fn circuit(&self) -> f64 {
        self.circuit
    }

    /// Interference-plus-noise over gain: the floor of channel `k` in the
    /// water-filling picture. Infinite for a zero-gain channel.
    pub fn floor(&self, k: usize) -> f64 {
        let g = self.gains[k];
        if g > 0.0 {
            (self.view.interference[k] + self.view.noise) / g
        } else {
            f64::INFINITY
        }
    }

    pub fn floors(&self) -> Vec<f64> {
        (0..self.channels()).map(|k| self.floor(k)).collect()
    }

    pub fn has_usable_channel(&self) -> bool {
        (0..self.channels()).any(|k| self.floor(k).is_finite())
    }

    pub fn rate(&self, powers: &[f64]) -> f64 {
        powers
            .iter()
            .enumerate()
            .map(|(k, &p)| log2_1p(sinr(p * self.gains[k], self.view.interference[k] + self.view.noise)))
            .sum()
    }

    pub fn total_power(&self, powers: &[f64]) -> f64 {
        powers.iter().sum::<f64>() / self.params.eta + self.circuit
    }

    pub fn ee(&self, powers: &[f64]) -> Result<f64> {
        crate::net_model::ratio(self.rate(powers), self.total_power(powers))
    }

    /// `[level - floor_k]^+` on every channel. A level equal to a floor
    /// gives that channel exactly zero.
    pub fn fill(&self, level: f64) -> Vec<f64> {
        (0..self.channels()).map(|k| (level - self.floor(k)).max(0.0)).collect()
    }

    /// Water level whose fill spends exactly `budget` watts.
    pub fn level_for_budget(&self, budget: f64) -> f64 {
        let mut floors: Vec<f64> = self.floors().into_iter().filter(|f| f.is_finite()).collect();
        if floors.is_empty() {
            return f64::INFINITY;
        }
        floors.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for m in 1..=floors.len() {
            acc += floors[m - 1];
            let level = (budget + acc) / m as f64;
            if m == floors.len() || level <= floors[m] {
                return level;
            }
        }
        unreachable!("loop returns on the last channel")
    }

    /// Highest rate reachable within the power budget.
    pub fn max_rate_allocation(&self) -> Vec<f64> {
        if !self.has_usable_channel() {
            return vec![0.0; self.channels()];
        }
        self.fill(self.level_for_budget(self.params.p_max))
    }
}

/// Settings of the Dinkelbach outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachConfig {
    pub q_init: f64,
    pub l_max: usize,
    pub delta: f64,
    pub inner: DualConfig,
}

impl Default for DinkelbachConfig {
    fn default() -> Self {
        DinkelbachConfig {
            q_init: 0.0,
            l_max: 10,
            delta: 1e-3,
            inner: DualConfig::default(),
        }
    }
}

impl DinkelbachConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::invalid("l_max must be >= 1"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta must be > 0"));
        }
        if !(self.q_init >= 0.0 && self.q_init.is_finite()) {
            return Err(Error::invalid("q_init must be >= 0"));
        }
        self.inner.validate()
    }
}

/// Settings of the dual (multiplier) iteration.
///
/// Step sizes follow the diminishing rule `mu(tau) = mu0 / sqrt(tau)`, with
/// doubling while a multiplier is still too small. Once a multiplier's
/// gradient has changed sign its optimum is bracketed and the bracket is
/// bisected; a step projected onto zero is always taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualConfig {
    pub mu0_alpha: f64,
    pub mu0_beta: f64,
    pub tau_max: usize,
    pub eps_dual: f64,
    /// Starting value of the power-budget multiplier. Must be positive so
    /// that the first water level is finite when `q = 0`.
    pub beta_init: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            mu0_alpha: 0.1,
            mu0_beta: 0.1,
            tau_max: 500,
            eps_dual: 1e-6,
            beta_init: 1e-3,
        }
    }
}

impl DualConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.mu0_alpha, self.mu0_beta, self.eps_dual, self.beta_init];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) || self.tau_max == 0 {
            return Err(Error::invalid("dual step sizes, tolerance, beta_init and tau_max must be positive"));
        }
        Ok(())
    }

    pub fn step(&self, mu0: f64, tau: usize) -> f64 {
        mu0 / (tau as f64).sqrt()
    }
}

/// Result of one dual solve of the subtractive (or pure-rate) problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub powers: Vec<f64>,
    /// Rate-requirement multiplier.
    pub alpha: f64,
    /// Power-budget multiplier.
    pub beta: f64,
    pub iters: usize,
    pub feasible: bool,
}

/// Outcome of a per-player solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub powers: Vec<f64>,
    /// Achieved utility: EE for the energy solver, rate for the spectral one.
    pub q_star: f64,
    /// `rate - q * total_power` at exit.
    pub subtractive_residual: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Whether the rate requirement could be met.
    pub feasible: bool,
    /// Whether the stopping test fired before the iteration cap.
    pub converged: bool,
    /// Prices at which the subtractive problem was solved, in order.
    pub q_trace: Vec<f64>,
}

/// How a pair of multipliers maps to a water level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LevelRule {
    /// `eta (1 + alpha) log2 e / (q + eta beta)`.
    Energy { q: f64 },
    /// `(1 + alpha) log2 e / beta`.
    Spectral,
}

impl LevelRule {
    fn denominator(self, eta: f64, beta: f64) -> f64 {
        match self {
            LevelRule::Energy { q } => q + eta * beta,
            LevelRule::Spectral => beta,
        }
    }

    fn numerator(self, eta: f64, alpha: f64) -> f64 {
        match self {
            LevelRule::Energy { .. } => eta * (1.0 + alpha) * LOG2_E,
            LevelRule::Spectral => (1.0 + alpha) * LOG2_E,
        }
    }

    pub(crate) fn level(self, eta: f64, alpha: f64, beta: f64) -> Result<f64> {
        let den = self.denominator(eta, beta);
        if den > 0.0 {
            Ok(self.numerator(eta, alpha) / den)
        } else {
            Err(Error::InfiniteWaterLevel(match self {
                LevelRule::Energy { .. } => "q + eta * beta must be > 0",
                LevelRule::Spectral => "beta must be > 0",
            }))
        }
    }

    /// Budget multiplier that produces `level` with rate multiplier `alpha`.
    fn beta_for_level(self, eta: f64, alpha: f64, level: f64) -> f64 {
        let target = self.numerator(eta, alpha) / level;
        match self {
            LevelRule::Energy { q } => ((target - q) / eta).max(0.0),
            LevelRule::Spectral => target,
        }
    }
}

/// Energy-efficient water-filling for a D2D pair at fixed multipliers.
pub fn waterfill_ee_d2d(prob: &LinkProblem, q: f64, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check_multipliers(q, alpha, beta)?;
    let level = LevelRule::Energy { q }.level(prob.params.eta, alpha, beta)?;
    Ok(prob.fill(level))
}

/// Energy-efficient water-filling for a cellular UE: rate multiplier
/// `delta`, budget multiplier `theta`.
pub fn waterfill_ee_cellular(prob: &LinkProblem, q: f64, delta: f64, theta: f64) -> Result<f64> {
    single_channel(prob)?;
    Ok(waterfill_ee_d2d(prob, q, delta, theta)?[0])
}

pub(crate) fn single_channel(prob: &LinkProblem) -> Result<()> {
    if prob.channels() == 1 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("cellular link has one channel, got {}", prob.channels())))
    }
}

pub(crate) fn check_multipliers(q: f64, alpha: f64, beta: f64) -> Result<()> {
    if q >= 0.0 && alpha >= 0.0 && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("q, alpha, beta must be >= 0 (got {q}, {alpha}, {beta})")))
    }
}

/// `rate(powers) - q * total_power(powers)`.
pub fn transformed_objective(prob: &LinkProblem, powers: &[f64], q: f64) -> f64 {
    prob.rate(powers) - q * prob.total_power(powers)
}

/// One multiplier with the bracket learned from gradient signs.
#[derive(Debug, Clone, Copy)]
struct Multiplier {
    value: f64,
    floor: f64,
    lo: f64,
    hi: Option<f64>,
}

impl Multiplier {
    fn new(value: f64, floor: f64) -> Self {
        Multiplier {
            value,
            floor,
            lo: floor,
            hi: None,
        }
    }

    /// Projected step `[x + mu * push]^+`; `push > 0` means the multiplier
    /// is too small. Returns the size of the move.
    fn step(&mut self, push: f64, mu: f64) -> f64 {
        let x = self.value;
        if push > 0.0 {
            self.lo = x;
            // The other multiplier moved the optimum past the bracket.
            if self.hi.is_some_and(|h| h - x <= f64::EPSILON * h.abs()) {
                self.hi = None;
            }
        } else if push < 0.0 {
            self.hi = Some(x);
            if x - self.lo <= f64::EPSILON * x.abs() {
                self.lo = self.floor;
            }
        } else {
            return 0.0;
        }
        let mut next = (x + mu * push).max(self.floor);
        if push > 0.0 && self.hi.is_none() {
            next = next.max(2.0 * x);
        }
        if let Some(h) = self.hi {
            let projected = next == self.floor && self.lo == self.floor;
            if !projected {
                next = 0.5 * (self.lo + h);
            }
        }
        self.value = next;
        (next - x).abs()
    }
}

/// Removes rounding overshoot of the budget.
fn clip_to_budget(powers: &mut [f64], p_max: f64) {
    let spent: f64 = powers.iter().sum();
    if spent > p_max {
        powers.iter_mut().for_each(|p| *p *= p_max / spent);
    }
}

pub(crate) fn dual_ascent_core(prob: &LinkProblem, rule: LevelRule, cfg: &DualConfig) -> Result<DualOutcome> {
    cfg.validate()?;
    let p_max = prob.params.p_max;
    let r_min = prob.params.r_min;
    let eta = prob.params.eta;

    if !prob.has_usable_channel() {
        return Ok(DualOutcome {
            powers: vec![0.0; prob.channels()],
            alpha: if r_min > 0.0 { ALPHA_CAP } else { 0.0 },
            beta: 0.0,
            iters: 0,
            feasible: r_min <= 0.0,
        });
    }

    let full = prob.max_rate_allocation();
    if prob.rate(&full) < r_min - PRIMAL_TOL {
        let level = prob.level_for_budget(p_max);
        return Ok(DualOutcome {
            powers: full,
            alpha: ALPHA_CAP,
            beta: rule.beta_for_level(eta, ALPHA_CAP, level),
            iters: 0,
            feasible: false,
        });
    }

    // With q = 0 the budget multiplier alone keeps the level finite.
    let beta_floor = if rule.denominator(eta, 0.0) > 0.0 { 0.0 } else { f64::MIN_POSITIVE };
    let mut alpha = Multiplier::new(0.0, 0.0);
    let mut beta = Multiplier::new(cfg.beta_init.max(beta_floor), beta_floor);
    let mut last_move = f64::INFINITY;
    let mut powers = Vec::new();

    for tau in 1..=cfg.tau_max {
        powers = prob.fill(rule.level(eta, alpha.value, beta.value)?);
        let rate = prob.rate(&powers);
        let spent: f64 = powers.iter().sum();

        let budget_ok = spent <= p_max * (1.0 + PRIMAL_TOL)
            && (beta.value == beta_floor || (spent - p_max).abs() <= PRIMAL_TOL * p_max);
        let rate_ok = rate >= r_min - PRIMAL_TOL && (alpha.value == 0.0 || (rate - r_min).abs() <= PRIMAL_TOL);
        if budget_ok && rate_ok && last_move <= cfg.eps_dual {
            clip_to_budget(&mut powers, p_max);
            return Ok(DualOutcome {
                powers,
                alpha: alpha.value,
                beta: beta.value,
                iters: tau,
                feasible: true,
            });
        }

        let da = alpha.step(r_min - rate, cfg.step(cfg.mu0_alpha, tau));
        let db = beta.step(spent - p_max, cfg.step(cfg.mu0_beta, tau));
        last_move = (da / (1.0 + alpha.value)).max(db / (1.0 + beta.value));
    }

    // A level far above the floors turns tiny multiplier errors into large
    // power errors; pull an overspent allocation back onto the budget.
    if powers.iter().sum::<f64>() > p_max {
        powers = prob.fill(prob.level_for_budget(p_max));
        clip_to_budget(&mut powers, p_max);
    }
    Ok(DualOutcome {
        powers,
        alpha: alpha.value,
        beta: beta.value,
        iters: cfg.tau_max,
        feasible: true,
    })
}

/// Solves `max rate - q * total_power` subject to the rate requirement and
/// the power budget by alternating water-filling and multiplier updates.
pub fn dual_ascent(prob: &LinkProblem, q: f64, cfg: &DualConfig) -> Result<DualOutcome> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!("price q must be >= 0, got {q}")));
    }
    dual_ascent_core(prob, LevelRule::Energy { q }, cfg)
}

/// Optimal value of the subtractive problem at price `q`. Decreasing in `q`
/// with a unique root at the optimal energy efficiency.
pub fn f_of_q(prob: &LinkProblem, q: f64, cfg: &DualConfig) -> Result<f64> {
    let out = dual_ascent(prob, q, cfg)?;
    Ok(transformed_objective(prob, &out.powers, q))
}

/// Dinkelbach iteration for `max rate / total_power`.
///
/// Infeasible rate requirements end the iteration on the first pass with
/// `feasible = false` and the full-budget water-filling allocation.
pub fn dinkelbach_solve(prob: &LinkProblem, cfg: &DinkelbachConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let mut q = cfg.q_init;
    let mut q_trace = vec![q];
    let mut inner_iters = 0;

    for n in 1..=cfg.l_max {
        let out = dual_ascent(prob, q, &cfg.inner)?;
        inner_iters += out.iters;
        let residual = transformed_objective(prob, &out.powers, q);
        let ratio = prob.ee(&out.powers)?;
        if !out.feasible || residual <= cfg.delta {
            return Ok(SolverReport {
                powers: out.powers,
                q_star: ratio,
                subtractive_residual: residual,
                outer_iters: n,
                inner_iters,
                feasible: out.feasible,
                converged: out.feasible,
                q_trace,
            });
        }
        if n == cfg.l_max {
            return Ok(SolverReport {
                powers: out.powers,
                q_star: ratio,
                subtractive_residual: residual,
                outer_iters: n,
                inner_iters,
                feasible: true,
                converged: false,
                q_trace,
            });
        }
        q = ratio;
        q_trace.push(q);
    }
    unreachable!("loop returns by l_max")
}
