//! C ABI over `d2d-eegame`.
//!
//! Instances live behind an opaque [`D2dInstance`] handle. Every fallible
//! call returns a [`D2dStatus`]; on failure the message is kept per thread
//! and read with [`d2d_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use d2d_eegame::ee_solver::{dinkelbach_solve, DinkelbachConfig, InterferenceView, LinkProblem};
use d2d_eegame::game::{run_to_equilibrium, GameConfig, Policy};
use d2d_eegame::harness::{generate_topology, ScenarioConfig};
use d2d_eegame::net_model::{network_ee, Gains, NetworkInstance, PowerProfile, UeParams};
use d2d_eegame::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D2dStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    IndexOutOfRange = 3,
    Dimension = 4,
    UndefinedRatio = 5,
    InfiniteWaterLevel = 6,
    TooLarge = 7,
    Config = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D2dPolicy {
    EnergyEfficient = 0,
    SpectralEfficient = 1,
    Random = 2,
}

impl From<D2dPolicy> for Policy {
    fn from(p: D2dPolicy) -> Self {
        match p {
            D2dPolicy::EnergyEfficient => Policy::EnergyEfficient,
            D2dPolicy::SpectralEfficient => Policy::SpectralEfficient,
            D2dPolicy::Random => Policy::Random,
        }
    }
}

/// Per-device parameters in watts and bits/s/Hz.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2dUeParams {
    pub p_max: f64,
    pub r_min: f64,
    pub p_cir: f64,
    pub eta: f64,
}

impl From<D2dUeParams> for UeParams {
    fn from(p: D2dUeParams) -> Self {
        UeParams {
            p_max: p.p_max,
            r_min: p.r_min,
            p_cir: p.p_cir,
            eta: p.eta,
        }
    }
}

/// Result of a single-link energy-efficiency solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2dLinkResult {
    pub ee: f64,
    pub outer_iters: usize,
    pub feasible: bool,
    pub converged: bool,
}

/// Summary of a finished game; powers are written to caller buffers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2dGameResult {
    pub rounds: usize,
    pub converged: bool,
    pub infeasible_players: usize,
    pub network_ee: f64,
}

/// Opaque network instance.
pub struct D2dInstance(NetworkInstance);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> D2dStatus {
    match e {
        Error::IndexOutOfRange { .. } => D2dStatus::IndexOutOfRange,
        Error::InvalidParameter(_) => D2dStatus::InvalidParameter,
        Error::Dimension(_) => D2dStatus::Dimension,
        Error::UndefinedRatio => D2dStatus::UndefinedRatio,
        Error::InfiniteWaterLevel(_) => D2dStatus::InfiniteWaterLevel,
        Error::TooLarge { .. } => D2dStatus::TooLarge,
        Error::Config(_) => D2dStatus::Config,
        Error::Io { .. } | Error::Csv { .. } | Error::Json { .. } => D2dStatus::Io,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> D2dStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            D2dStatus::Ok
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            D2dStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            D2dStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Fail::Null(what))
    } else {
        Ok(slice::from_raw_parts(p, len))
    }
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        Ok(&mut [])
    } else if p.is_null() {
        Err(Fail::Null(what))
    } else {
        Ok(slice::from_raw_parts_mut(p, len))
    }
}

unsafe fn handle<'a>(p: *const D2dInstance) -> Result<&'a NetworkInstance, Fail> {
    p.as_ref().map(|h| &h.0).ok_or(Fail::Null("instance"))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn d2d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn d2d_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Random topology of trial `trial` under the default scenario with the
/// given sizes and seed.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn d2d_instance_generate(
    n_d2d: usize,
    n_cell: usize,
    seed: u64,
    trial: u64,
    out: *mut *mut D2dInstance,
) -> D2dStatus {
    guard(|| {
        let cfg = ScenarioConfig {
            n_d2d,
            n_cell,
            seed,
            ..Default::default()
        };
        generate_into(&cfg, trial, out)
    })
}

/// Random topology of trial `trial` under a `key = value` scenario text.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d2d_instance_generate_from_config(
    config: *const c_char,
    trial: u64,
    out: *mut *mut D2dInstance,
) -> D2dStatus {
    guard(|| {
        if config.is_null() {
            return Err(Fail::Null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| Error::Config("config text is not UTF-8".into()))?;
        let mut cfg = ScenarioConfig::default();
        cfg.apply_text(text)?;
        generate_into(&cfg, trial, out)
    })
}

unsafe fn generate_into(cfg: &ScenarioConfig, trial: u64, out: *mut *mut D2dInstance) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    cfg.validate()?;
    let inst = generate_topology(cfg, &mut cfg.trial_rng(trial))?.instance;
    *out = Box::into_raw(Box::new(D2dInstance(inst)));
    Ok(())
}

/// Builds an instance from row-major gain arrays:
/// `d2d[i*K+k]`, `cell[k]`, `cell_to_d2d[k*N+i]`,
/// `d2d_cross[(j*N+i)*K+k]` (transmitter j to receiver i),
/// `d2d_to_bs[i*K+k]`.
///
/// # Safety
/// Every array must hold the number of elements above; `ue_d2d` holds
/// `n_d2d` entries and `ue_cell` holds `n_cell`; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn d2d_instance_from_arrays(
    n_d2d: usize,
    n_cell: usize,
    d2d: *const f64,
    cell: *const f64,
    cell_to_d2d: *const f64,
    d2d_cross: *const f64,
    d2d_to_bs: *const f64,
    noise: f64,
    ue_d2d: *const D2dUeParams,
    ue_cell: *const D2dUeParams,
    out: *mut *mut D2dInstance,
) -> D2dStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let (n, k) = (n_d2d, n_cell);
        let rows = |flat: &[f64], width: usize| -> Vec<Vec<f64>> {
            if width == 0 {
                Vec::new()
            } else {
                flat.chunks(width).map(<[f64]>::to_vec).collect()
            }
        };
        let d2d = input(d2d, n * k, "d2d")?;
        let cross = input(d2d_cross, n * n * k, "d2d_cross")?;
        let gains = Gains {
            d2d: rows(d2d, k),
            cell: input(cell, k, "cell")?.to_vec(),
            cell_to_d2d: if n == 0 {
                vec![Vec::new(); k]
            } else {
                rows(input(cell_to_d2d, k * n, "cell_to_d2d")?, n)
            },
            d2d_cross: (0..n).map(|j| rows(&cross[j * n * k..(j + 1) * n * k], k)).collect(),
            d2d_to_bs: rows(input(d2d_to_bs, n * k, "d2d_to_bs")?, k),
        };
        let ue_d2d = input(ue_d2d, n, "ue_d2d")?.iter().map(|&p| p.into()).collect();
        let ue_cell = input(ue_cell, k, "ue_cell")?.iter().map(|&p| p.into()).collect();
        let inst = NetworkInstance::new(gains, noise, ue_d2d, ue_cell)?;
        *out = Box::into_raw(Box::new(D2dInstance(inst)));
        Ok(())
    })
}

/// Releases an instance. NULL is ignored.
///
/// # Safety
/// `inst` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn d2d_instance_free(inst: *mut D2dInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of D2D pairs and cellular UEs (channels).
///
/// # Safety
/// `inst` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn d2d_instance_dims(inst: *const D2dInstance, n_d2d: *mut usize, n_cell: *mut usize) -> D2dStatus {
    guard(|| {
        let inst = handle(inst)?;
        output(n_d2d, 1, "n_d2d")?[0] = inst.n_d2d();
        output(n_cell, 1, "n_cell")?[0] = inst.n_cell();
        Ok(())
    })
}

unsafe fn profile(inst: &NetworkInstance, d2d: *const f64, cell: *const f64) -> Result<PowerProfile, Fail> {
    let (n, k) = (inst.n_d2d(), inst.n_cell());
    let flat = input(d2d, n * k, "d2d_powers")?;
    Ok(PowerProfile {
        d2d: (0..n).map(|i| flat[i * k..(i + 1) * k].to_vec()).collect(),
        cell: input(cell, k, "cell_powers")?.to_vec(),
    })
}

/// Sum of every link's energy efficiency under the given powers
/// (`d2d_powers[i*K+k]`, `cell_powers[k]`).
///
/// # Safety
/// Arrays must match the instance dimensions; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d2d_network_ee(
    inst: *const D2dInstance,
    d2d_powers: *const f64,
    cell_powers: *const f64,
    out: *mut f64,
) -> D2dStatus {
    guard(|| {
        let inst = handle(inst)?;
        let prof = profile(inst, d2d_powers, cell_powers)?;
        output(out, 1, "out")?[0] = network_ee(inst, &prof)?;
        Ok(())
    })
}

/// Energy-efficient allocation of one link over `channels` channels by
/// default Dinkelbach settings. A cellular link uses one channel and
/// counts its circuit power once; a D2D link counts it twice.
///
/// # Safety
/// `gains`, `interference` and `powers` hold `channels` elements;
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d2d_solve_link_ee(
    channels: usize,
    gains: *const f64,
    interference: *const f64,
    noise: f64,
    params: D2dUeParams,
    cellular: bool,
    powers: *mut f64,
    result: *mut D2dLinkResult,
) -> D2dStatus {
    guard(|| {
        let gains = input(gains, channels, "gains")?.to_vec();
        let view = InterferenceView::new(input(interference, channels, "interference")?.to_vec(), noise)?;
        let prob = if cellular {
            if channels != 1 {
                return Err(Error::Dimension(format!("a cellular link uses one channel, got {channels}")).into());
            }
            LinkProblem::cellular(view, gains[0], params.into())?
        } else {
            LinkProblem::d2d(view, gains, params.into())?
        };
        let rep = dinkelbach_solve(&prob, &DinkelbachConfig::default())?;
        output(powers, channels, "powers")?.copy_from_slice(&rep.powers);
        output(result, 1, "result")?[0] = D2dLinkResult {
            ee: rep.q_star,
            outer_iters: rep.outer_iters,
            feasible: rep.feasible,
            converged: rep.converged,
        };
        Ok(())
    })
}

/// Plays sequential best responses from zero powers with the default
/// update order. The final powers go to `d2d_powers[i*K+k]` and
/// `cell_powers[k]`.
///
/// # Safety
/// Output arrays must match the instance dimensions; `result` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn d2d_run_game(
    inst: *const D2dInstance,
    policy: D2dPolicy,
    max_rounds: usize,
    seed: u64,
    d2d_powers: *mut f64,
    cell_powers: *mut f64,
    result: *mut D2dGameResult,
) -> D2dStatus {
    guard(|| {
        let inst = handle(inst)?;
        let mut cfg = GameConfig::new(policy.into());
        cfg.max_rounds = max_rounds;
        cfg.rng_seed = seed;
        let trace = run_to_equilibrium(inst, &cfg)?;
        let prof = trace.final_profile();
        let k = inst.n_cell();
        let d2d_out = output(d2d_powers, inst.n_d2d() * k, "d2d_powers")?;
        for (i, row) in prof.d2d.iter().enumerate() {
            d2d_out[i * k..(i + 1) * k].copy_from_slice(row);
        }
        output(cell_powers, k, "cell_powers")?.copy_from_slice(&prof.cell);
        output(result, 1, "result")?[0] = D2dGameResult {
            rounds: trace.rounds_to_converge,
            converged: trace.converged,
            infeasible_players: trace.infeasible.len(),
            network_ee: network_ee(inst, prof)?,
        };
        Ok(())
    })
}
