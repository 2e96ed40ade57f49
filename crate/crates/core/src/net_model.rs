//! Physical-layer model of a D2D underlay uplink.
//!
//! `N` D2D pairs reuse all `K` orthogonal uplink channels, one per cellular
//! UE. Everything here is linear-scale: watts, dimensionless gains and
//! bits/s/Hz. Conversions from dBm/dB live at the CLI boundary.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// `log2(1 + x)` evaluated as `ln(1 + x) / ln 2`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    (1.0 + x).ln() / LN_2
}

/// Signal over interference-plus-noise. A silent transmitter has SINR 0
/// regardless of the denominator.
#[inline]
pub fn sinr(signal_power: f64, interference_plus_noise: f64) -> f64 {
    if signal_power == 0.0 {
        0.0
    } else {
        signal_power / interference_plus_noise
    }
}

/// Per-link limits and power costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeParams {
    /// Maximum total transmit power, watts.
    pub p_max: f64,
    /// Minimum rate, bits/s/Hz.
    pub r_min: f64,
    /// Circuit power of one device, watts.
    pub p_cir: f64,
    /// Power-amplifier efficiency in (0, 1].
    pub eta: f64,
}

impl UeParams {
    pub fn new(p_max: f64, r_min: f64, p_cir: f64, eta: f64) -> Result<Self> {
        let params = UeParams {
            p_max,
            r_min,
            p_cir,
            eta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::invalid(format!("p_max must be > 0, got {}", self.p_max)));
        }
        if !(self.r_min >= 0.0 && self.r_min.is_finite()) {
            return Err(Error::invalid(format!("r_min must be >= 0, got {}", self.r_min)));
        }
        if !(self.p_cir >= 0.0 && self.p_cir.is_finite()) {
            return Err(Error::invalid(format!("p_cir must be >= 0, got {}", self.p_cir)));
        }
        // eta = 1 is accepted: it is the lossless reference used by the
        // closed-form checks.
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must be in (0, 1], got {}", self.eta)));
        }
        Ok(())
    }
}

/// Dense channel gains of one realization.
///
/// Layouts: `d2d[i][k]`, `cell[k]`, `cell_to_d2d[k][i]`,
/// `d2d_cross[j][i][k]` (transmitter `j` into receiver `i`, diagonal
/// ignored), `d2d_to_bs[i][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub d2d: Vec<Vec<f64>>,
    pub cell: Vec<f64>,
    pub cell_to_d2d: Vec<Vec<f64>>,
    pub d2d_cross: Vec<Vec<Vec<f64>>>,
    pub d2d_to_bs: Vec<Vec<f64>>,
}

impl Gains {
    /// Unit direct gains, zero interference gains.
    pub fn decoupled(n_d2d: usize, n_cell: usize) -> Self {
        Gains {
            d2d: vec![vec![1.0; n_cell]; n_d2d],
            cell: vec![1.0; n_cell],
            cell_to_d2d: vec![vec![0.0; n_d2d]; n_cell],
            d2d_cross: vec![vec![vec![0.0; n_cell]; n_d2d]; n_d2d],
            d2d_to_bs: vec![vec![0.0; n_cell]; n_d2d],
        }
    }
}

/// One static network realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    gains: Gains,
    noise: f64,
    ue_d2d: Vec<UeParams>,
    ue_cell: Vec<UeParams>,
}

fn check_gain(name: &str, v: f64, strict: bool) -> Result<()> {
    let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
    if ok {
        Ok(())
    } else {
        let bound = if strict { "> 0" } else { ">= 0" };
        Err(Error::invalid(format!("{name} gain must be finite and {bound}, got {v}")))
    }
}

impl NetworkInstance {
    pub fn new(gains: Gains, noise: f64, ue_d2d: Vec<UeParams>, ue_cell: Vec<UeParams>) -> Result<Self> {
        let n = ue_d2d.len();
        let k = ue_cell.len();
        if k == 0 {
            return Err(Error::Dimension("at least one cellular UE (channel) is required".into()));
        }
        let dim = |what: &str, got: usize, want: usize| -> Result<()> {
            if got == want {
                Ok(())
            } else {
                Err(Error::Dimension(format!("{what}: expected {want}, got {got}")))
            }
        };
        dim("d2d rows", gains.d2d.len(), n)?;
        dim("cell", gains.cell.len(), k)?;
        dim("cell_to_d2d rows", gains.cell_to_d2d.len(), k)?;
        dim("d2d_cross rows", gains.d2d_cross.len(), n)?;
        dim("d2d_to_bs rows", gains.d2d_to_bs.len(), n)?;
        for row in &gains.d2d {
            dim("d2d columns", row.len(), k)?;
            row.iter().try_for_each(|&g| check_gain("d2d", g, true))?;
        }
        gains.cell.iter().try_for_each(|&g| check_gain("cellular", g, true))?;
        for row in &gains.cell_to_d2d {
            dim("cell_to_d2d columns", row.len(), n)?;
            row.iter().try_for_each(|&g| check_gain("cell_to_d2d", g, false))?;
        }
        for (j, rows) in gains.d2d_cross.iter().enumerate() {
            dim("d2d_cross receivers", rows.len(), n)?;
            for (i, row) in rows.iter().enumerate() {
                dim("d2d_cross channels", row.len(), k)?;
                if i != j {
                    row.iter().try_for_each(|&g| check_gain("d2d_cross", g, false))?;
                }
            }
        }
        for row in &gains.d2d_to_bs {
            dim("d2d_to_bs columns", row.len(), k)?;
            row.iter().try_for_each(|&g| check_gain("d2d_to_bs", g, false))?;
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::invalid(format!("noise must be > 0, got {noise}")));
        }
        ue_d2d.iter().chain(&ue_cell).try_for_each(UeParams::validate)?;
        Ok(NetworkInstance {
            gains,
            noise,
            ue_d2d,
            ue_cell,
        })
    }

    pub fn n_d2d(&self) -> usize {
        self.ue_d2d.len()
    }

    pub fn n_cell(&self) -> usize {
        self.ue_cell.len()
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn ue_d2d(&self) -> &[UeParams] {
        &self.ue_d2d
    }

    pub fn ue_cell(&self) -> &[UeParams] {
        &self.ue_cell
    }

    /// Interference seen by D2D receiver `i` on channel `k`, noise excluded.
    pub fn interference_d2d(&self, prof: &PowerProfile, i: usize, k: usize) -> f64 {
        let g = &self.gains;
        let from_cell = prof.cell[k] * g.cell_to_d2d[k][i];
        let from_d2d: f64 = (0..self.n_d2d())
            .filter(|&j| j != i)
            .map(|j| prof.d2d[j][k] * g.d2d_cross[j][i][k])
            .sum();
        from_cell + from_d2d
    }

    /// Interference seen at the BS on channel `k`, noise excluded.
    pub fn interference_cellular(&self, prof: &PowerProfile, k: usize) -> f64 {
        (0..self.n_d2d())
            .map(|i| prof.d2d[i][k] * self.gains.d2d_to_bs[i][k])
            .sum()
    }

    fn check_profile(&self, prof: &PowerProfile) -> Result<()> {
        if prof.d2d.len() != self.n_d2d()
            || prof.cell.len() != self.n_cell()
            || prof.d2d.iter().any(|row| row.len() != self.n_cell())
        {
            return Err(Error::Dimension(format!(
                "power profile does not match a {}x{} instance",
                self.n_d2d(),
                self.n_cell()
            )));
        }
        Ok(())
    }
}

/// Power strategy of every player: `d2d[i][k]` and `cell[k]`, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub d2d: Vec<Vec<f64>>,
    pub cell: Vec<f64>,
}

impl PowerProfile {
    pub fn zeros(n_d2d: usize, n_cell: usize) -> Self {
        PowerProfile {
            d2d: vec![vec![0.0; n_cell]; n_d2d],
            cell: vec![0.0; n_cell],
        }
    }

    pub fn for_instance(inst: &NetworkInstance) -> Self {
        Self::zeros(inst.n_d2d(), inst.n_cell())
    }

    /// Non-negativity plus the per-player power budgets. `rel_tol` is
    /// relative to each player's `p_max`.
    pub fn is_feasible(&self, inst: &NetworkInstance, rel_tol: f64) -> bool {
        if inst.check_profile(self).is_err() {
            return false;
        }
        let nonneg = self.d2d.iter().flatten().chain(&self.cell).all(|&p| p >= 0.0 && p.is_finite());
        let d2d_ok = self
            .d2d
            .iter()
            .zip(inst.ue_d2d())
            .all(|(row, ue)| row.iter().sum::<f64>() <= ue.p_max * (1.0 + rel_tol));
        let cell_ok = self
            .cell
            .iter()
            .zip(inst.ue_cell())
            .all(|(&p, ue)| p <= ue.p_max * (1.0 + rel_tol));
        nonneg && d2d_ok && cell_ok
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &PowerProfile) -> f64 {
        let d2d = self
            .d2d
            .iter()
            .flatten()
            .zip(other.d2d.iter().flatten())
            .map(|(a, b)| (a - b).abs());
        let cell = self.cell.iter().zip(&other.cell).map(|(a, b)| (a - b).abs());
        d2d.chain(cell).fold(0.0, f64::max)
    }
}

/// Kind of QoS requirement a link can carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QosSpec {
    MinRate { r_min: f64 },
    /// `bits_total` must be delivered within `delay_tol` seconds.
    Delay { bits_total: f64, delay_tol: f64 },
    /// Cap on the aggregate D2D interference at the BS, watts.
    InterferenceCap { i_max: f64 },
}

/// Minimum rate equivalent to delivering `bits_total` within `delay_tol`.
/// Bandwidth is normalized to 1 Hz.
pub fn qos_from_delay(bits_total: f64, delay_tol: f64) -> Result<f64> {
    if !(delay_tol > 0.0) {
        return Err(Error::invalid(format!("delay tolerance must be > 0, got {delay_tol}")));
    }
    if !(bits_total >= 0.0) {
        return Err(Error::invalid(format!("bit count must be >= 0, got {bits_total}")));
    }
    Ok(bits_total / delay_tol)
}

/// Minimum cellular rate equivalent to capping the D2D interference at the
/// BS by `i_max`, for cellular transmit power `p_c` and gain `g_c`.
pub fn qos_from_interference_cap(i_max: f64, p_c: f64, g_c: f64, noise: f64) -> Result<f64> {
    if !(i_max >= 0.0) {
        return Err(Error::invalid(format!("interference cap must be >= 0, got {i_max}")));
    }
    Ok(log2_1p(sinr(p_c * g_c, i_max + noise)))
}

impl QosSpec {
    /// Equivalent minimum rate. `cellular` carries `(p_c, g_c, noise)` and
    /// is required only for the interference-cap form.
    pub fn min_rate(&self, cellular: Option<(f64, f64, f64)>) -> Result<f64> {
        match *self {
            QosSpec::MinRate { r_min } if r_min >= 0.0 => Ok(r_min),
            QosSpec::MinRate { r_min } => Err(Error::invalid(format!("r_min must be >= 0, got {r_min}"))),
            QosSpec::Delay { bits_total, delay_tol } => qos_from_delay(bits_total, delay_tol),
            QosSpec::InterferenceCap { i_max } => {
                let (p_c, g_c, noise) = cellular.ok_or_else(|| {
                    Error::invalid("interference-cap QoS needs the cellular link power, gain and noise")
                })?;
                qos_from_interference_cap(i_max, p_c, g_c, noise)
            }
        }
    }
}

pub fn sinr_d2d(inst: &NetworkInstance, prof: &PowerProfile, i: usize, k: usize) -> Result<f64> {
    check_index("D2D pair", i, inst.n_d2d())?;
    check_index("channel", k, inst.n_cell())?;
    inst.check_profile(prof)?;
    let signal = prof.d2d[i][k] * inst.gains.d2d[i][k];
    Ok(sinr(signal, inst.interference_d2d(prof, i, k) + inst.noise))
}

pub fn sinr_cellular(inst: &NetworkInstance, prof: &PowerProfile, k: usize) -> Result<f64> {
    check_index("cellular UE", k, inst.n_cell())?;
    inst.check_profile(prof)?;
    let signal = prof.cell[k] * inst.gains.cell[k];
    Ok(sinr(signal, inst.interference_cellular(prof, k) + inst.noise))
}

/// Sum over channels of `log2(1 + sinr)`.
pub fn rate_d2d(inst: &NetworkInstance, prof: &PowerProfile, i: usize) -> Result<f64> {
    check_index("D2D pair", i, inst.n_d2d())?;
    (0..inst.n_cell()).map(|k| sinr_d2d(inst, prof, i, k).map(log2_1p)).sum()
}

pub fn rate_cellular(inst: &NetworkInstance, prof: &PowerProfile, k: usize) -> Result<f64> {
    sinr_cellular(inst, prof, k).map(log2_1p)
}

/// Transmit power through the PA plus circuit power at both ends of the pair.
pub fn power_total_d2d(powers: &[f64], params: &UeParams) -> f64 {
    powers.iter().sum::<f64>() / params.eta + 2.0 * params.p_cir
}

/// Transmit power through the PA plus transmitter circuit power.
pub fn power_total_cellular(power: f64, params: &UeParams) -> f64 {
    power / params.eta + params.p_cir
}

pub(crate) fn ratio(rate: f64, total_power: f64) -> Result<f64> {
    if total_power > 0.0 {
        Ok(rate / total_power)
    } else {
        Err(Error::UndefinedRatio)
    }
}

pub fn ee_utility_d2d(inst: &NetworkInstance, prof: &PowerProfile, i: usize) -> Result<f64> {
    let rate = rate_d2d(inst, prof, i)?;
    ratio(rate, power_total_d2d(&prof.d2d[i], &inst.ue_d2d[i]))
}

pub fn ee_utility_cellular(inst: &NetworkInstance, prof: &PowerProfile, k: usize) -> Result<f64> {
    let rate = rate_cellular(inst, prof, k)?;
    ratio(rate, power_total_cellular(prof.cell[k], &inst.ue_cell[k]))
}

pub fn se_utility_d2d(inst: &NetworkInstance, prof: &PowerProfile, i: usize) -> Result<f64> {
    rate_d2d(inst, prof, i)
}

pub fn se_utility_cellular(inst: &NetworkInstance, prof: &PowerProfile, k: usize) -> Result<f64> {
    rate_cellular(inst, prof, k)
}

/// Sum of the per-link EE ratios (not total rate over total power).
pub fn network_ee(inst: &NetworkInstance, prof: &PowerProfile) -> Result<f64> {
    let d2d: f64 = (0..inst.n_d2d())
        .map(|i| ee_utility_d2d(inst, prof, i))
        .sum::<Result<f64>>()?;
    let cell: f64 = (0..inst.n_cell())
        .map(|k| ee_utility_cellular(inst, prof, k))
        .sum::<Result<f64>>()?;
    Ok(d2d + cell)
}
