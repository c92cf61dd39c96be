//! C interface to the blockage model.
//!
//! Every fallible call returns an [`MmbStatus`]; on failure a message is kept
//! per thread and can be copied out with [`mmb_last_error_message`]. Models
//! and traces are opaque handles released with their `_free` function.
//! Angles are in radians. Enumeration arguments must hold one of their
//! declared values.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mmblock_core::conditional::{conditional_curve, ConditionalOptions};
use mmblock_core::renewal::{ModelOptions, RenewalModel};
use mmblock_core::residence::DEFAULT_GRID_INTERVALS;
use mmblock_core::simulator::{simulate, LinkState, SimulationMode, StateTrace};
use mmblock_core::{BlockageError, LinkGeometry, ScenarioConfig, ScenarioKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DegenerateGeometry = 3,
    Domain = 4,
    NumericalFailure = 5,
    NeverBlocked = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmbScenarioKind {
    S1 = 1,
    S2 = 2,
    S3 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmbSimMode {
    Rectangle = 0,
    Exact = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmbDistribution {
    /// Residence time in the blockage zone.
    ResidenceTime = 0,
    Blocked = 1,
    NonBlocked = 2,
    ResidualBlocked = 3,
}

/// Link geometry and blocker population. `c` is the S2 triangular mode;
/// pass NaN for the sidewalk midpoint.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MmbScenario {
    pub kind: MmbScenarioKind,
    pub h_t: f64,
    pub h_r: f64,
    pub h_b: f64,
    pub d_m: f64,
    pub r_0: f64,
    pub w_s: f64,
    pub alpha: f64,
    pub v: f64,
    pub lambda_i: f64,
    pub c: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MmbMetrics {
    pub lambda: f64,
    pub e_t: f64,
    pub e_eta: f64,
    pub e_eta_numeric: f64,
    pub e_omega: f64,
    pub e_xi: f64,
    pub frac_los: f64,
    pub frac_nlos: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MmbConditional {
    pub delta_t: f64,
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    pub terms_used: u32,
}

/// One constant-state interval; `blocked` is 1 for NLOS.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MmbInterval {
    pub start: f64,
    pub end: f64,
    pub blocked: u8,
}

/// Opaque fitted model.
pub struct MmbModel(RenewalModel);

/// Opaque simulated trace.
pub struct MmbTrace(StateTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &BlockageError) -> MmbStatus {
    match err {
        BlockageError::InvalidParameter { .. } | BlockageError::Config { .. } => {
            MmbStatus::InvalidParameter
        }
        BlockageError::DegenerateGeometry(_) => MmbStatus::DegenerateGeometry,
        BlockageError::Domain(_) | BlockageError::Infeasible { .. } => MmbStatus::Domain,
        BlockageError::NumericalFailure { .. } => MmbStatus::NumericalFailure,
        BlockageError::NeverBlocked => MmbStatus::NeverBlocked,
        BlockageError::GridMismatch(_) | BlockageError::InvalidTable(_) => MmbStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (MmbStatus, String)>) -> MmbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MmbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MmbStatus::Internal
        }
    }
}

fn core(err: BlockageError) -> (MmbStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (MmbStatus, String) {
    (MmbStatus::NullPointer, format!("`{name}` is null"))
}

/// Borrows `n` elements at `p`; a null pointer is accepted only when `n` is 0.
unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], (MmbStatus, String)> {
    match (p.is_null(), n) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(null(name)),
        // SAFETY: the caller guarantees `p` points to `n` readable elements.
        (false, _) => Ok(unsafe { std::slice::from_raw_parts(p, n) }),
    }
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    n: usize,
    name: &str,
) -> Result<&'a mut [T], (MmbStatus, String)> {
    match (p.is_null(), n) {
        (_, 0) => Ok(&mut []),
        (true, _) => Err(null(name)),
        // SAFETY: the caller guarantees `p` points to `n` writable elements.
        (false, _) => Ok(unsafe { std::slice::from_raw_parts_mut(p, n) }),
    }
}

impl From<MmbScenario> for ScenarioConfig {
    fn from(s: MmbScenario) -> Self {
        ScenarioConfig {
            kind: match s.kind {
                MmbScenarioKind::S1 => ScenarioKind::S1,
                MmbScenarioKind::S2 => ScenarioKind::S2,
                MmbScenarioKind::S3 => ScenarioKind::S3,
            },
            link: LinkGeometry {
                h_t: s.h_t,
                h_r: s.h_r,
                h_b: s.h_b,
                d_m: s.d_m,
                r_0: s.r_0,
                w_s: s.w_s,
                alpha: s.alpha,
            },
            v: s.v,
            lambda_i: s.lambda_i,
            c: (!s.c.is_nan()).then_some(s.c),
        }
    }
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn mmb_status_string(status: MmbStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MmbStatus::Ok => b"ok\0",
        MmbStatus::NullPointer => b"null pointer\0",
        MmbStatus::InvalidParameter => b"invalid parameter\0",
        MmbStatus::DegenerateGeometry => b"degenerate geometry\0",
        MmbStatus::Domain => b"domain error\0",
        MmbStatus::NumericalFailure => b"numerical failure\0",
        MmbStatus::NeverBlocked => b"link is never blocked\0",
        MmbStatus::BufferTooSmall => b"buffer too small\0",
        MmbStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length excluding the NUL.
/// Returns 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mmb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` holds `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Fills `out` with the baseline S1 scenario.
///
/// # Safety
/// `out` must be null or point to a writable `MmbScenario`.
#[no_mangle]
pub unsafe extern "C" fn mmb_scenario_default(out: *mut MmbScenario) -> MmbStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let d = ScenarioConfig::default();
        let l = d.link;
        *out = MmbScenario {
            kind: MmbScenarioKind::S1,
            h_t: l.h_t,
            h_r: l.h_r,
            h_b: l.h_b,
            d_m: l.d_m,
            r_0: l.r_0,
            w_s: l.w_s,
            alpha: l.alpha,
            v: d.v,
            lambda_i: d.lambda_i,
            c: f64::NAN,
        };
        Ok(())
    })
}

/// Builds the renewal model. `grid_intervals` of 0 selects the default.
/// On success `*out` owns a model to be released with [`mmb_model_free`].
///
/// # Safety
/// `scenario` must be null or point to a valid `MmbScenario`; `out` must be
/// null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mmb_model_build(
    scenario: *const MmbScenario,
    grid_intervals: u32,
    out: *mut *mut MmbModel,
) -> MmbStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let scenario = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let opts = ModelOptions {
            grid_intervals: match grid_intervals {
                0 => DEFAULT_GRID_INTERVALS,
                n => n as usize,
            },
            ..ModelOptions::default()
        };
        let model = RenewalModel::build(&ScenarioConfig::from(*scenario), &opts).map_err(core)?;
        *out = Box::into_raw(Box::new(MmbModel(model)));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a pointer returned by [`mmb_model_build`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mmb_model_free(model: *mut MmbModel) {
    if !model.is_null() {
        // SAFETY: ownership came from `Box::into_raw` in `mmb_model_build`.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// # Safety
/// `model` must be null or a live model handle; `out` must be null or point
/// to a writable `MmbMetrics`.
#[no_mangle]
pub unsafe extern "C" fn mmb_model_metrics(
    model: *const MmbModel,
    out: *mut MmbMetrics,
) -> MmbStatus {
    guard(|| {
        let m = &unsafe { model.as_ref() }.ok_or_else(|| null("model"))?.0;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = MmbMetrics {
            lambda: m.lambda,
            e_t: m.e_t,
            e_eta: m.e_eta,
            e_eta_numeric: m.e_eta_numeric,
            e_omega: m.e_omega,
            e_xi: m.cycle_mean(),
            frac_los: m.frac_los,
            frac_nlos: m.frac_nlos,
        };
        Ok(())
    })
}

/// Evaluates a CDF of the model at `n` points.
///
/// # Safety
/// `model` must be a live handle; `xs` and `out` must each point to `n`
/// elements (readable and writable respectively), or be null when `n` is 0.
#[no_mangle]
pub unsafe extern "C" fn mmb_model_cdf(
    model: *const MmbModel,
    dist: MmbDistribution,
    xs: *const f64,
    out: *mut f64,
    n: usize,
) -> MmbStatus {
    guard(|| {
        let m = &unsafe { model.as_ref() }.ok_or_else(|| null("model"))?.0;
        let xs = unsafe { slice(xs, n, "xs") }?;
        let out = unsafe { slice_mut(out, n, "out") }?;
        let owned;
        let table = match dist {
            MmbDistribution::ResidenceTime => &m.f_t,
            MmbDistribution::Blocked => &m.f_eta,
            MmbDistribution::NonBlocked => {
                owned = m.nonblocked().map_err(core)?;
                &owned
            }
            MmbDistribution::ResidualBlocked => {
                owned = m.residual_blocked().map_err(core)?;
                &owned
            }
        };
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = table.eval(x);
        }
        Ok(())
    })
}

/// Conditional state probabilities at `n` lags with series tolerance
/// `epsilon` (0 selects the default).
///
/// # Safety
/// `model` must be a live handle; `delta_t` and `out` must each point to `n`
/// elements, or be null when `n` is 0.
#[no_mangle]
pub unsafe extern "C" fn mmb_model_conditional(
    model: *const MmbModel,
    delta_t: *const f64,
    n: usize,
    epsilon: f64,
    out: *mut MmbConditional,
) -> MmbStatus {
    guard(|| {
        let m = &unsafe { model.as_ref() }.ok_or_else(|| null("model"))?.0;
        let lags = unsafe { slice(delta_t, n, "delta_t") }?;
        let out = unsafe { slice_mut(out, n, "out") }?;
        let mut opts = ConditionalOptions::default();
        if epsilon != 0.0 {
            opts.epsilon = epsilon;
        }
        let c = conditional_curve(m, lags, &opts).map_err(core)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = MmbConditional {
                delta_t: c.delta_t[i],
                p00: c.p00[i],
                p01: c.p01[i],
                p10: c.p10[i],
                p11: c.p11[i],
                terms_used: c.terms_used[i].max(c.terms_used_nlos[i]) as u32,
            };
        }
        Ok(())
    })
}

/// Simulates `duration` seconds of the link. On success `*out` owns a trace
/// to be released with [`mmb_trace_free`].
///
/// # Safety
/// `scenario` must point to a valid `MmbScenario`; `out` must point to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mmb_simulate(
    scenario: *const MmbScenario,
    duration: f64,
    seed: u64,
    mode: MmbSimMode,
    out: *mut *mut MmbTrace,
) -> MmbStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let scenario = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        let mode = match mode {
            MmbSimMode::Rectangle => SimulationMode::Rectangle,
            MmbSimMode::Exact => SimulationMode::Exact,
        };
        let trace =
            simulate(&ScenarioConfig::from(*scenario), duration, seed, mode).map_err(core)?;
        *out = Box::into_raw(Box::new(MmbTrace(trace)));
        Ok(())
    })
}

/// Number of intervals in a trace; 0 for null.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn mmb_trace_len(trace: *const MmbTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.0.intervals.len())
}

/// Copies the trace intervals into `out`. Fails with `BufferTooSmall`,
/// writing nothing, when `capacity` is below [`mmb_trace_len`].
///
/// # Safety
/// `trace` must be a live handle; `out` must point to `capacity` writable
/// elements, or be null when `capacity` is 0.
#[no_mangle]
pub unsafe extern "C" fn mmb_trace_intervals(
    trace: *const MmbTrace,
    out: *mut MmbInterval,
    capacity: usize,
) -> MmbStatus {
    guard(|| {
        let t = &unsafe { trace.as_ref() }.ok_or_else(|| null("trace"))?.0;
        let need = t.intervals.len();
        if capacity < need {
            return Err((
                MmbStatus::BufferTooSmall,
                format!("{need} intervals, room for {capacity}"),
            ));
        }
        let out = unsafe { slice_mut(out, need, "out") }?;
        for (o, i) in out.iter_mut().zip(&t.intervals) {
            *o = MmbInterval {
                start: i.start,
                end: i.end,
                blocked: u8::from(i.state == LinkState::Nlos),
            };
        }
        Ok(())
    })
}

/// Releases a trace; null is ignored.
///
/// # Safety
/// `trace` must be null or a pointer returned by [`mmb_simulate`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn mmb_trace_free(trace: *mut MmbTrace) {
    if !trace.is_null() {
        // SAFETY: ownership came from `Box::into_raw` in `mmb_simulate`.
        drop(unsafe { Box::from_raw(trace) });
    }
}
