//! C interface to `thermoporo`.
//!
//! Every function returns a [`TpStatus`]. On failure a message is kept per
//! thread and can be copied out with [`tp_last_error_message`]. Objects are
//! opaque handles released with their `_free` function; passing NULL to a
//! `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use thermoporo::conditions::{condition_reports, Provenance};
use thermoporo::config::parse_config;
use thermoporo::experiments::final_time_error;
use thermoporo::problems::{geothermal_problem, toy_problem, DataOverrides};
use thermoporo::steppers::{run, DampingAnchor, RunStatus, Scheme, SchemeConfig, Startup, Trajectory};
use thermoporo::{AssembledSystem, Error, ProblemData};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotSpd = 4,
    Singular = 5,
    OutOfRange = 6,
    AssumptionViolated = 7,
    Degenerate = 8,
    NegativeQuadraticForm = 9,
    ZeroReference = 10,
    InvalidConfig = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpScheme {
    ImplicitEuler = 0,
    ImplicitMidpoint = 1,
    SemiExplicitHalf = 2,
    SemiExplicitHalfIterative = 3,
    SemiExplicitFull = 4,
    SigmaSplitting = 5,
    HfMIterative = 6,
    #[allow(non_camel_case_types)]
    H_F_M_Iterative = 7,
    #[allow(non_camel_case_types)]
    F_H_M_Iterative = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStartup {
    ConstantHistory = 0,
    ImplicitEulerStep = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpDampingAnchor {
    PreviousIterate = 0,
    PreviousStep = 1,
}

/// Scheme settings. `final_time <= 0` uses the problem's final time and
/// `gamma <= 0` the relaxation factor from the coupling conditions.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TpSchemeConfig {
    pub scheme: TpScheme,
    pub tau: f64,
    pub final_time: f64,
    pub l_p: f64,
    pub l_theta: f64,
    pub inner_iterations: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub damping_anchor: TpDampingAnchor,
    pub startup: TpStartup,
}

/// Coupling condition numbers of one report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TpConditions {
    /// 1 for constants from material parameters, 0 for spectral ones
    pub physical: i32,
    pub omega_hd: f64,
    pub omega_fd: f64,
    pub gamma: f64,
    pub k_min: usize,
    pub fd_precondition: i32,
}

/// Relative final time errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TpErrors {
    pub e_u: f64,
    pub e_p: f64,
    pub e_theta: f64,
    pub e_total: f64,
}

/// An assembled system with its initial data and loads.
pub struct TpProblem {
    system: AssembledSystem,
    data: ProblemData,
}

pub struct TpTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> TpStatus {
    match e {
        Error::DimensionMismatch(_) => TpStatus::DimensionMismatch,
        Error::NotSpd(_) => TpStatus::NotSpd,
        Error::Singular(_) => TpStatus::Singular,
        Error::InvalidSize(_) | Error::OutOfRange(_) => TpStatus::OutOfRange,
        Error::MeshMismatch => TpStatus::DimensionMismatch,
        Error::AssumptionViolated(_) => TpStatus::AssumptionViolated,
        Error::DegenerateDenominator(_) => TpStatus::Degenerate,
        Error::NegativeQuadraticForm(_) => TpStatus::NegativeQuadraticForm,
        Error::ZeroReference(_) => TpStatus::ZeroReference,
        Error::InvalidConfig(_) => TpStatus::InvalidConfig,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (TpStatus, String)>) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TpStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            TpStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TpStatus, String) {
    (TpStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (TpStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

impl From<TpScheme> for Scheme {
    fn from(s: TpScheme) -> Self {
        match s {
            TpScheme::ImplicitEuler => Scheme::ImplicitEuler,
            TpScheme::ImplicitMidpoint => Scheme::ImplicitMidpoint,
            TpScheme::SemiExplicitHalf => Scheme::SemiExplicitHalf,
            TpScheme::SemiExplicitHalfIterative => Scheme::SemiExplicitHalfIterative,
            TpScheme::SemiExplicitFull => Scheme::SemiExplicitFull,
            TpScheme::SigmaSplitting => Scheme::SigmaSplitting,
            TpScheme::HfMIterative => Scheme::HfMIterative,
            TpScheme::H_F_M_Iterative => Scheme::HFMIterative,
            TpScheme::F_H_M_Iterative => Scheme::FHMIterative,
        }
    }
}

impl From<Scheme> for TpScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::ImplicitEuler => TpScheme::ImplicitEuler,
            Scheme::ImplicitMidpoint => TpScheme::ImplicitMidpoint,
            Scheme::SemiExplicitHalf => TpScheme::SemiExplicitHalf,
            Scheme::SemiExplicitHalfIterative => TpScheme::SemiExplicitHalfIterative,
            Scheme::SemiExplicitFull => TpScheme::SemiExplicitFull,
            Scheme::SigmaSplitting => TpScheme::SigmaSplitting,
            Scheme::HfMIterative => TpScheme::HfMIterative,
            Scheme::HFMIterative => TpScheme::H_F_M_Iterative,
            Scheme::FHMIterative => TpScheme::F_H_M_Iterative,
        }
    }
}

impl TpSchemeConfig {
    fn to_config(self) -> SchemeConfig {
        let mut c = SchemeConfig::new(self.scheme.into(), self.tau);
        c.final_time = (self.final_time > 0.0).then_some(self.final_time);
        c.l_p = self.l_p;
        c.l_theta = self.l_theta;
        c.inner_iterations = self.inner_iterations;
        c.sigma = self.sigma;
        c.gamma = (self.gamma > 0.0).then_some(self.gamma);
        c.damping_anchor = match self.damping_anchor {
            TpDampingAnchor::PreviousIterate => DampingAnchor::PreviousIterate,
            TpDampingAnchor::PreviousStep => DampingAnchor::PreviousStep,
        };
        c.startup = match self.startup {
            TpStartup::ConstantHistory => Startup::ConstantHistory,
            TpStartup::ImplicitEulerStep => Startup::ImplicitEulerStep,
        };
        c
    }
}

/// Library version as a static NUL terminated string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated). `*len` receives the length needed without the NUL.
///
/// # Safety
/// `buf` must point to `cap` writable bytes or be NULL with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn tp_last_error_message(buf: *mut c_char, cap: usize, len: *mut usize) -> TpStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    if !len.is_null() {
        *len = msg.len();
    }
    if cap == 0 || buf.is_null() {
        return if msg.is_empty() && cap == 0 { TpStatus::Ok } else { TpStatus::BufferTooSmall };
    }
    let n = msg.len().min(cap - 1);
    ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
    *buf.add(n) = 0;
    if n < msg.len() {
        TpStatus::BufferTooSmall
    } else {
        TpStatus::Ok
    }
}

/// Looks up a scheme by its id, e.g. `"semi_explicit_half"`.
///
/// # Safety
/// `name` must be a NUL terminated string.
#[no_mangle]
pub unsafe extern "C" fn tp_scheme_from_name(name: *const c_char, out: *mut TpScheme) -> TpStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let s = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| (TpStatus::InvalidArgument, "name is not UTF-8".to_string()))?;
        let scheme: Scheme = s.parse().map_err(lib)?;
        write_out(out, scheme.into(), "out")
    })
}

/// Default settings for `scheme` with step `tau`.
#[no_mangle]
pub extern "C" fn tp_scheme_config_default(scheme: TpScheme, tau: f64) -> TpSchemeConfig {
    let c = SchemeConfig::new(scheme.into(), tau);
    TpSchemeConfig {
        scheme,
        tau,
        final_time: 0.0,
        l_p: c.l_p,
        l_theta: c.l_theta,
        inner_iterations: c.inner_iterations,
        sigma: c.sigma,
        gamma: 0.0,
        damping_anchor: TpDampingAnchor::PreviousIterate,
        startup: TpStartup::ConstantHistory,
    }
}

fn boxed(system: AssembledSystem, data: ProblemData) -> *mut TpProblem {
    Box::into_raw(Box::new(TpProblem { system, data }))
}

/// The geothermal preset on an `n x n` mesh with displacement degree
/// `u_degree` (1 or 2).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_problem_geothermal(n: usize, u_degree: usize, out: *mut *mut TpProblem) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (s, d) = geothermal_problem(n, u_degree, DataOverrides::default()).map_err(lib)?;
        *out = boxed(s, d);
        Ok(())
    })
}

/// The 3-dof toy system with coupling `alpha` and thermal capacity `c0_tilde`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_problem_toy(alpha: f64, c0_tilde: f64, out: *mut *mut TpProblem) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (s, d) = toy_problem(alpha, c0_tilde).map_err(lib)?;
        *out = boxed(s, d);
        Ok(())
    })
}

/// Builds the problem described by a TOML configuration document.
///
/// # Safety
/// `text` must be a NUL terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_problem_from_config(text: *const c_char, out: *mut *mut TpProblem) -> TpStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let t = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (TpStatus::InvalidArgument, "config is not UTF-8".to_string()))?;
        let cfg = parse_config(t).map_err(|e| (TpStatus::InvalidConfig, e.to_string()))?;
        let (s, d) = cfg.build_problem().map_err(lib)?;
        *out = boxed(s, d);
        Ok(())
    })
}

/// # Safety
/// `p` must come from a `tp_problem_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tp_problem_free(p: *mut TpProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Numbers of displacement, pressure and temperature unknowns.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_problem_dims(
    p: *const TpProblem,
    n_u: *mut usize,
    n_p: *mut usize,
    n_theta: *mut usize,
) -> TpStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        write_out(n_u, p.system.n_u(), "n_u")?;
        write_out(n_p, p.system.n_p(), "n_p")?;
        write_out(n_theta, p.system.n_theta(), "n_theta")
    })
}

/// Condition reports: the physical one first when material parameters
/// exist, then the spectral one. Writes up to `cap` reports and the
/// available count to `*count`.
///
/// # Safety
/// `out` must point to `cap` writable reports.
#[no_mangle]
pub unsafe extern "C" fn tp_problem_conditions(
    p: *const TpProblem,
    out: *mut TpConditions,
    cap: usize,
    count: *mut usize,
) -> TpStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let reports = condition_reports(&p.system).map_err(lib)?;
        write_out(count, reports.len(), "count")?;
        if cap > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (k, r) in reports.iter().take(cap).enumerate() {
            *out.add(k) = TpConditions {
                physical: (r.constants.provenance == Provenance::Physical) as i32,
                omega_hd: r.omega_hd,
                omega_fd: r.omega_fd,
                gamma: r.gamma,
                k_min: r.k_min,
                fd_precondition: r.fd_precondition as i32,
            };
        }
        if cap < reports.len() {
            return Err((TpStatus::BufferTooSmall, format!("{} reports available", reports.len())));
        }
        Ok(())
    })
}

/// Integrates the problem. A diverged run still succeeds; query it with
/// [`tp_trajectory_status`].
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_run(
    p: *const TpProblem,
    config: *const TpSchemeConfig,
    out: *mut *mut TpTrajectory,
) -> TpStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = run(&p.system, &p.data, &c.to_config()).map_err(lib)?;
        *out = Box::into_raw(Box::new(TpTrajectory { inner }));
        Ok(())
    })
}

/// # Safety
/// `t` must come from [`tp_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tp_trajectory_free(t: *mut TpTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of stored time levels, including the initial one.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_trajectory_len(t: *const TpTrajectory, len: *mut usize) -> TpStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        write_out(len, t.inner.states.len(), "len")
    })
}

/// `*diverged` is 1 when the run blew up at level `*step`, else 0.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_trajectory_status(t: *const TpTrajectory, diverged: *mut i32, step: *mut usize) -> TpStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        let (d, s) = match t.inner.status {
            RunStatus::Completed => (0, 0),
            RunStatus::Diverged { step } => (1, step),
        };
        write_out(diverged, d, "diverged")?;
        write_out(step, s, "step")
    })
}

unsafe fn copy_into(src: &[f64], dst: *mut f64, len: usize, what: &str) -> Result<(), (TpStatus, String)> {
    if dst.is_null() {
        return Ok(());
    }
    if len != src.len() {
        return Err((
            TpStatus::DimensionMismatch,
            format!("{what} buffer has length {len}, need {}", src.len()),
        ));
    }
    slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
    Ok(())
}

/// Copies level `index` into the given buffers. Any buffer may be NULL to
/// skip that component; lengths must match the problem dimensions.
///
/// # Safety
/// Non-NULL buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_trajectory_state(
    t: *const TpTrajectory,
    index: usize,
    time: *mut f64,
    u: *mut f64,
    n_u: usize,
    p: *mut f64,
    n_p: usize,
    theta: *mut f64,
    n_theta: usize,
) -> TpStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        let s = t.inner.states.get(index).ok_or_else(|| {
            (
                TpStatus::OutOfRange,
                format!("level {index} of {}", t.inner.states.len()),
            )
        })?;
        if !time.is_null() {
            *time = t.inner.times[index];
        }
        copy_into(&s.u, u, n_u, "u")?;
        copy_into(&s.p, p, n_p, "p")?;
        copy_into(&s.theta, theta, n_theta, "theta")
    })
}

/// Errors of the last level of `approx` against the last level of
/// `reference`, in the energy norms of `p`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_final_time_error(
    p: *const TpProblem,
    reference: *const TpTrajectory,
    approx: *const TpTrajectory,
    out: *mut TpErrors,
) -> TpStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let r = reference.as_ref().ok_or_else(|| null("reference"))?;
        let a = approx.as_ref().ok_or_else(|| null("approx"))?;
        let e = final_time_error(r.inner.last(), a.inner.last(), &p.system).map_err(lib)?;
        write_out(
            out,
            TpErrors {
                e_u: e.e_u,
                e_p: e.e_p,
                e_theta: e.e_theta,
                e_total: e.e_total,
            },
            "out",
        )
    })
}
