//! Sequential best-response dynamics over all D2D pairs and cellular UEs.
//!
//! Each player sees the network only through the aggregate interference on
//! its channels. Players update one after another against the freshest
//! profile (Gauss-Seidel order) until no power entry moves by more than
//! `eps_eq` over a full round.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ee_solver::{dinkelbach_solve, DinkelbachConfig, InterferenceView, LinkProblem};
use crate::error::{check_index, Error, Result};
use crate::net_model::{self, log2_1p, sinr, NetworkInstance, PowerProfile};
use crate::se_solver::solve_se;

/// How every player picks its strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    EnergyEfficient,
    SpectralEfficient,
    Random,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::EnergyEfficient, Policy::SpectralEfficient, Policy::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::EnergyEfficient => "energy-efficient",
            Policy::SpectralEfficient => "spectral-efficient",
            Policy::Random => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ee" | "energy" | "energy-efficient" => Ok(Policy::EnergyEfficient),
            "se" | "spectral" | "spectral-efficient" => Ok(Policy::SpectralEfficient),
            "random" | "rand" => Ok(Policy::Random),
            other => Err(Error::invalid(format!("unknown policy `{other}` (expected ee, se or random)"))),
        }
    }
}

/// Utility a deviation is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Utility {
    Energy,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    D2d(usize),
    Cellular(usize),
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::D2d(i) => write!(f, "d2d[{i}]"),
            Player::Cellular(k) => write!(f, "cell[{k}]"),
        }
    }
}

/// D2D pairs in index order, then cellular UEs.
pub fn default_order(inst: &NetworkInstance) -> Vec<Player> {
    (0..inst.n_d2d())
        .map(Player::D2d)
        .chain((0..inst.n_cell()).map(Player::Cellular))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub policy: Policy,
    pub max_rounds: usize,
    /// Stop when no power entry changed by more than this over a round, watts.
    pub eps_eq: f64,
    /// Update order; empty means [`default_order`].
    pub update_order: Vec<Player>,
    /// Seed of the random policy's stream.
    pub rng_seed: u64,
    pub solver: DinkelbachConfig,
}

impl GameConfig {
    pub fn new(policy: Policy) -> Self {
        GameConfig {
            policy,
            max_rounds: 20,
            eps_eq: 1e-4,
            update_order: Vec::new(),
            rng_seed: 0,
            solver: DinkelbachConfig::default(),
        }
    }

    pub fn validate(&self, inst: &NetworkInstance) -> Result<()> {
        if self.max_rounds < 1 {
            return Err(Error::invalid("max_rounds must be >= 1"));
        }
        if !(self.eps_eq > 0.0) {
            return Err(Error::invalid("eps_eq must be > 0"));
        }
        if !self.update_order.is_empty() {
            let mut order = self.update_order.clone();
            order.sort();
            if order != default_order(inst) {
                return Err(Error::invalid("update_order must be a permutation of all players"));
            }
        }
        self.solver.validate()
    }

    fn order(&self, inst: &NetworkInstance) -> Vec<Player> {
        if self.update_order.is_empty() {
            default_order(inst)
        } else {
            self.update_order.clone()
        }
    }
}

/// Aggregate interference the player measures, excluding its own signal.
pub fn interference_view(inst: &NetworkInstance, prof: &PowerProfile, player: Player) -> Result<InterferenceView> {
    let interference = match player {
        Player::D2d(i) => {
            check_index("D2D pair", i, inst.n_d2d())?;
            (0..inst.n_cell()).map(|k| inst.interference_d2d(prof, i, k)).collect()
        }
        Player::Cellular(k) => {
            check_index("cellular UE", k, inst.n_cell())?;
            vec![inst.interference_cellular(prof, k)]
        }
    };
    InterferenceView::new(interference, inst.noise())
}

/// The player's own optimization problem against the current profile.
pub fn link_problem(inst: &NetworkInstance, prof: &PowerProfile, player: Player) -> Result<LinkProblem> {
    let view = interference_view(inst, prof, player)?;
    match player {
        Player::D2d(i) => LinkProblem::d2d(view, inst.gains().d2d[i].clone(), inst.ue_d2d()[i]),
        Player::Cellular(k) => LinkProblem::cellular(view, inst.gains().cell[k], inst.ue_cell()[k]),
    }
}

fn own_powers(prof: &PowerProfile, player: Player) -> Vec<f64> {
    match player {
        Player::D2d(i) => prof.d2d[i].clone(),
        Player::Cellular(k) => vec![prof.cell[k]],
    }
}

fn set_own_powers(prof: &mut PowerProfile, player: Player, powers: &[f64]) {
    match player {
        Player::D2d(i) => prof.d2d[i].copy_from_slice(powers),
        Player::Cellular(k) => prof.cell[k] = powers[0],
    }
}

/// Random strategy: a D2D pair spends a uniform fraction of its budget
/// split by normalized uniform weights; a cellular UE draws uniformly in
/// `[0, p_max]`.
pub fn random_allocation<R: Rng + ?Sized>(inst: &NetworkInstance, player: Player, rng: &mut R) -> Result<Vec<f64>> {
    match player {
        Player::D2d(i) => {
            check_index("D2D pair", i, inst.n_d2d())?;
            let p_max = inst.ue_d2d()[i].p_max;
            let weights: Vec<f64> = (0..inst.n_cell()).map(|_| rng.random::<f64>()).collect();
            let scale: f64 = rng.random();
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                Ok(weights.iter().map(|u| scale * p_max * u / total).collect())
            } else {
                Ok(vec![0.0; inst.n_cell()])
            }
        }
        Player::Cellular(k) => {
            check_index("cellular UE", k, inst.n_cell())?;
            Ok(vec![rng.random::<f64>() * inst.ue_cell()[k].p_max])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub powers: Vec<f64>,
    pub feasible: bool,
}

pub fn best_response<R: Rng + ?Sized>(
    inst: &NetworkInstance,
    prof: &PowerProfile,
    player: Player,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<BestResponse> {
    let response = match cfg.policy {
        Policy::EnergyEfficient => {
            let rep = dinkelbach_solve(&link_problem(inst, prof, player)?, &cfg.solver)?;
            BestResponse {
                powers: rep.powers,
                feasible: rep.feasible,
            }
        }
        Policy::SpectralEfficient => {
            let rep = solve_se(&link_problem(inst, prof, player)?, &cfg.solver.inner)?;
            BestResponse {
                powers: rep.powers,
                feasible: rep.feasible,
            }
        }
        Policy::Random => {
            let powers = random_allocation(inst, player, rng)?;
            let prob = link_problem(inst, prof, player)?;
            let feasible = prob.rate(&powers) >= prob.params().r_min;
            BestResponse { powers, feasible }
        }
    };
    Ok(response)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub profile: PowerProfile,
    /// Players whose rate requirement could not be met this round.
    pub infeasible: Vec<Player>,
}

/// One pass over the update order, each player responding to the profile
/// as already updated earlier in the pass.
pub fn play_round<R: Rng + ?Sized>(
    inst: &NetworkInstance,
    prof: &PowerProfile,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<RoundOutcome> {
    cfg.validate(inst)?;
    let mut profile = prof.clone();
    let mut infeasible = Vec::new();
    for player in cfg.order(inst) {
        let response = best_response(inst, &profile, player, cfg, rng)?;
        if !response.feasible {
            infeasible.push(player);
        }
        set_own_powers(&mut profile, player, &response.powers);
    }
    Ok(RoundOutcome { profile, infeasible })
}

/// Profile and utilities after one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub profile: PowerProfile,
    pub ee_d2d: Vec<f64>,
    pub ee_cell: Vec<f64>,
    pub se_d2d: Vec<f64>,
    pub se_cell: Vec<f64>,
}

impl RoundRecord {
    fn evaluate(inst: &NetworkInstance, profile: PowerProfile) -> Result<Self> {
        let n = inst.n_d2d();
        let k = inst.n_cell();
        let ee_d2d = (0..n).map(|i| net_model::ee_utility_d2d(inst, &profile, i)).collect::<Result<_>>()?;
        let ee_cell = (0..k).map(|c| net_model::ee_utility_cellular(inst, &profile, c)).collect::<Result<_>>()?;
        let se_d2d = (0..n).map(|i| net_model::se_utility_d2d(inst, &profile, i)).collect::<Result<_>>()?;
        let se_cell = (0..k).map(|c| net_model::se_utility_cellular(inst, &profile, c)).collect::<Result<_>>()?;
        Ok(RoundRecord {
            profile,
            ee_d2d,
            ee_cell,
            se_d2d,
            se_cell,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub policy: Policy,
    pub update_order: Vec<Player>,
    pub rounds: Vec<RoundRecord>,
    /// Rounds played; when `converged`, the round whose update moved no
    /// entry by more than `eps_eq`.
    pub rounds_to_converge: usize,
    pub converged: bool,
    /// Players flagged infeasible in the last round.
    pub infeasible: Vec<Player>,
}

impl GameTrace {
    pub fn final_profile(&self) -> &PowerProfile {
        &self.rounds.last().expect("a game plays at least one round").profile
    }

    pub fn final_round(&self) -> &RoundRecord {
        self.rounds.last().expect("a game plays at least one round")
    }
}

/// Plays rounds from the all-zero profile until the profile settles or
/// `max_rounds` is reached. The random policy always plays every round.
pub fn run_to_equilibrium(inst: &NetworkInstance, cfg: &GameConfig) -> Result<GameTrace> {
    cfg.validate(inst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut profile = PowerProfile::for_instance(inst);
    let mut rounds = Vec::with_capacity(cfg.max_rounds);
    let mut converged = false;
    let mut infeasible = Vec::new();

    for _ in 0..cfg.max_rounds {
        let outcome = play_round(inst, &profile, cfg, &mut rng)?;
        let change = outcome.profile.max_abs_diff(&profile);
        profile = outcome.profile;
        infeasible = outcome.infeasible;
        rounds.push(RoundRecord::evaluate(inst, profile.clone())?);
        if cfg.policy != Policy::Random && change < cfg.eps_eq {
            converged = true;
            break;
        }
    }

    Ok(GameTrace {
        policy: cfg.policy,
        update_order: cfg.order(inst),
        rounds_to_converge: rounds.len(),
        rounds,
        converged,
        infeasible,
    })
}

/// Best unilateral deviation found for one player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationGain {
    pub player: Player,
    pub current: f64,
    pub best: f64,
    /// Number of grid strategies that met the player's rate requirement.
    pub candidates: usize,
}

impl DeviationGain {
    pub fn abs_gain(&self) -> f64 {
        (self.best - self.current).max(0.0)
    }

    pub fn rel_gain(&self) -> f64 {
        let gain = self.abs_gain();
        if gain == 0.0 {
            0.0
        } else {
            gain / self.current.abs().max(f64::MIN_POSITIVE)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCheck {
    pub players: Vec<DeviationGain>,
}

impl EquilibriumCheck {
    pub fn max_abs_gain(&self) -> f64 {
        self.players.iter().map(DeviationGain::abs_gain).fold(0.0, f64::max)
    }

    pub fn max_rel_gain(&self) -> f64 {
        self.players.iter().map(DeviationGain::rel_gain).fold(0.0, f64::max)
    }
}

/// Enumerates every grid strategy `step * (j_1, .., j_K)` with
/// `sum j <= floor(p_max / step)` that meets the rate requirement and
/// returns the best utility and how many strategies qualified.
fn best_grid_deviation(prob: &LinkProblem, utility: Utility, step: f64) -> (f64, usize) {
    let p_max = prob.params().p_max;
    let r_min = prob.params().r_min;
    let eta = prob.params().eta;
    let levels = (p_max / step * (1.0 + 1e-12)).floor() as usize;
    let view = prob.view();
    let tables: Vec<Vec<f64>> = prob
        .gains()
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let denom = view.interference[k] + view.noise;
            (0..=levels).map(|j| log2_1p(sinr(j as f64 * step * g, denom))).collect()
        })
        .collect();

    struct Search<'a> {
        tables: &'a [Vec<f64>],
        step: f64,
        eta: f64,
        circuit: f64,
        r_min: f64,
        utility: Utility,
        best: f64,
        count: usize,
    }

    impl Search<'_> {
        fn visit(&mut self, k: usize, left: usize, used: usize, rate: f64) {
            if k == self.tables.len() {
                if rate < self.r_min {
                    return;
                }
                let value = match self.utility {
                    Utility::Spectral => rate,
                    Utility::Energy => {
                        let total = used as f64 * self.step / self.eta + self.circuit;
                        if total > 0.0 {
                            rate / total
                        } else {
                            return;
                        }
                    }
                };
                self.count += 1;
                if value > self.best {
                    self.best = value;
                }
                return;
            }
            for j in 0..=left {
                let r = rate + self.tables[k][j];
                self.visit(k + 1, left - j, used + j, r);
            }
        }
    }

    let mut search = Search {
        tables: &tables,
        step,
        eta,
        circuit: prob.circuit(),
        r_min: r_min - 1e-12,
        utility,
        best: f64::NEG_INFINITY,
        count: 0,
    };
    search.visit(0, levels, 0, 0.0);
    (search.best, search.count)
}

/// Grid search over every player's feasible unilateral deviations at
/// resolution `grid_step` watts. A player with no qualifying grid strategy
/// contributes zero gain.
pub fn verify_equilibrium(
    inst: &NetworkInstance,
    prof: &PowerProfile,
    utility: Utility,
    grid_step: f64,
) -> Result<EquilibriumCheck> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::invalid(format!("grid_step must be > 0, got {grid_step}")));
    }
    let players = default_order(inst)
        .into_iter()
        .map(|player| {
            let prob = link_problem(inst, prof, player)?;
            let own = own_powers(prof, player);
            let current = match utility {
                Utility::Energy => prob.ee(&own)?,
                Utility::Spectral => prob.rate(&own),
            };
            let (best, candidates) = best_grid_deviation(&prob, utility, grid_step);
            Ok(DeviationGain {
                player,
                current,
                best: if candidates > 0 { best } else { current },
                candidates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumCheck { players })
}
